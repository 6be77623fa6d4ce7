//! Binary container for keys, ciphertexts, tokens and wrapped rows.
//!
//! ```text
//! magic    4 bytes   "HVDB"
//! version  1 byte    0x01
//! curve    1 byte    0x01 bls12-381, 0x02 bn254
//! kind     1 byte    see RecordKind
//! count    u32 BE    number of body fields
//! body     count x (u32 BE length || bytes)
//! ```
//!
//! Every field holds exactly one primitive: a compressed group element, a
//! scalar, a target-group element, an 8-byte big-endian integer, or raw
//! bytes. Nested structures are laid out depth-first, with an integer
//! count field before every variable-length sequence. Vectors and bases
//! of the dimension-3 spaces used throughout carry no count. Trailing bytes
//! and unread fields are errors, so a record has exactly one encoding.

use std::collections::BTreeMap;
use std::path::Path;

use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};

use crate::dpvs::{Basis, GroupVec, Gt, LeftBasis, LeftVec, RightBasis, RightVec};
use crate::error::{Error, Result};
use crate::hve_amortized::{
    AmortizedCiphertext, AmortizedKey, AmortizedPublicKey, AmortizedSecretKey, CiphertextBlock,
    FamilyId, ParamSlot, ParametricKey,
};
use crate::hve_basic::{AttributeBlock, HveCiphertext, HveKey, MasterPublicKey, MasterSecretKey};
use crate::table::{KeyCheck, ParametricToken, QueryToken, SealedCell, WrappedRow, KEY_CHECK_LEN};
use crate::{Backend, CurveId};

pub const MAGIC: [u8; 4] = *b"HVDB";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 11;
const DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum RecordKind {
    PublicKey = 0x01,
    SecretKey = 0x02,
    Ciphertext = 0x03,
    Key = 0x04,
    Token = 0x05,
    ParametricToken = 0x06,
    WrappedRow = 0x07,
    BasicPublicKey = 0x08,
    BasicSecretKey = 0x09,
    BasicCiphertext = 0x0A,
    BasicKey = 0x0B,
    ParametricKey = 0x0C,
}

impl RecordKind {
    pub const ALL: [RecordKind; 12] = [
        RecordKind::PublicKey,
        RecordKind::SecretKey,
        RecordKind::Ciphertext,
        RecordKind::Key,
        RecordKind::Token,
        RecordKind::ParametricToken,
        RecordKind::WrappedRow,
        RecordKind::BasicPublicKey,
        RecordKind::BasicSecretKey,
        RecordKind::BasicCiphertext,
        RecordKind::BasicKey,
        RecordKind::ParametricKey,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| *k as u8 == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            RecordKind::PublicKey => "public key",
            RecordKind::SecretKey => "secret key",
            RecordKind::Ciphertext => "ciphertext",
            RecordKind::Key => "key",
            RecordKind::Token => "query token",
            RecordKind::ParametricToken => "parametric token",
            RecordKind::WrappedRow => "wrapped row",
            RecordKind::BasicPublicKey => "basic public key",
            RecordKind::BasicSecretKey => "basic secret key",
            RecordKind::BasicCiphertext => "basic ciphertext",
            RecordKind::BasicKey => "basic key",
            RecordKind::ParametricKey => "parametric key",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub curve: CurveId,
    pub kind: RecordKind,
}

/// Reads and checks the fixed header without touching the body.
pub fn peek_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Malformed(format!(
            "record too short ({} bytes)",
            bytes.len()
        )));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Malformed("bad magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let curve = CurveId::from_byte(bytes[5])
        .ok_or_else(|| Error::Malformed(format!("unknown curve id {}", bytes[5])))?;
    let kind = RecordKind::from_byte(bytes[6])
        .ok_or_else(|| Error::Malformed(format!("unknown record kind {}", bytes[6])))?;
    Ok(Header { curve, kind })
}

pub fn peek_header_file(path: impl AsRef<Path>) -> Result<Header> {
    peek_header(&std::fs::read(path)?)
}

/// A value with a container encoding on curve `E`.
pub trait Record<E: Backend>: Sized {
    const KIND: RecordKind;
    fn write_body(&self, w: &mut FieldWriter);
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut w = FieldWriter::default();
        self.write_body(&mut w);
        let mut out = Vec::with_capacity(HEADER_LEN + w.body.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&[VERSION, E::CURVE.to_byte(), Self::KIND as u8]);
        out.extend_from_slice(&w.count.to_be_bytes());
        out.extend_from_slice(&w.body);
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = peek_header(bytes)?;
        if header.curve != E::CURVE {
            return Err(Error::CurveMismatch {
                expected: E::CURVE.to_byte(),
                found: header.curve.to_byte(),
            });
        }
        if header.kind != Self::KIND {
            return Err(Error::WrongKind {
                expected: Self::KIND.name(),
                found: header.kind.name(),
            });
        }
        let count = u32::from_be_bytes(bytes[7..11].try_into().expect("4 bytes"));
        let mut r = FieldReader {
            rest: &bytes[HEADER_LEN..],
            remaining: count,
        };
        let value = Self::read_body(&mut r)?;
        if r.remaining != 0 {
            return Err(Error::Malformed(format!("{} unread fields", r.remaining)));
        }
        if !r.rest.is_empty() {
            return Err(Error::Malformed(format!("{} trailing bytes", r.rest.len())));
        }
        Ok(value)
    }

    fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Default)]
pub struct FieldWriter {
    body: Vec<u8>,
    count: u32,
}

impl FieldWriter {
    pub fn bytes(&mut self, b: &[u8]) {
        let len = u32::try_from(b.len()).expect("field longer than 4 GiB");
        self.body.extend_from_slice(&len.to_be_bytes());
        self.body.extend_from_slice(b);
        self.count += 1;
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_be_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn elem<T: CanonicalSerialize>(&mut self, x: &T) {
        let mut buf = Vec::with_capacity(x.compressed_size());
        x.serialize_compressed(&mut buf)
            .expect("writing to a Vec cannot fail");
        self.bytes(&buf);
    }

    fn vec3<G: ark_ec::AffineRepr>(&mut self, v: &GroupVec<G>) {
        debug_assert_eq!(v.len(), DIM);
        for e in v.elems() {
            self.elem(e);
        }
    }

    fn basis<G: ark_ec::AffineRepr>(&mut self, b: &Basis<G>) {
        debug_assert_eq!(b.dim(), DIM);
        for col in b.columns() {
            self.vec3(col);
        }
    }

    fn indices(&mut self, idx: &[usize]) {
        self.usize(idx.len());
        for &i in idx {
            self.usize(i);
        }
    }
}

pub struct FieldReader<'a> {
    rest: &'a [u8],
    remaining: u32,
}

impl<'a> FieldReader<'a> {
    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        if self.remaining == 0 {
            return Err(Error::Malformed("missing field".into()));
        }
        if self.rest.len() < 4 {
            return Err(Error::Malformed("truncated field length".into()));
        }
        let (len, rest) = self.rest.split_at(4);
        let len = u32::from_be_bytes(len.try_into().expect("4 bytes")) as usize;
        if rest.len() < len {
            return Err(Error::Malformed("truncated field".into()));
        }
        let (field, rest) = rest.split_at(len);
        self.rest = rest;
        self.remaining -= 1;
        Ok(field)
    }

    pub fn u64(&mut self) -> Result<u64> {
        let b = self.bytes()?;
        let arr: [u8; 8] = b
            .try_into()
            .map_err(|_| Error::Malformed(format!("integer field of {} bytes", b.len())))?;
        Ok(u64::from_be_bytes(arr))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::Malformed(format!("integer {v} out of range")))
    }

    /// A sequence length; bounded by the fields left so hostile counts
    /// cannot force large allocations.
    fn count(&mut self, per_item: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(per_item) > self.remaining as usize {
            return Err(Error::Malformed(format!(
                "count {n} exceeds remaining fields"
            )));
        }
        Ok(n)
    }

    pub fn elem<T: CanonicalDeserialize>(&mut self) -> Result<T> {
        let mut b = self.bytes()?;
        let v = T::deserialize_compressed(&mut b)
            .map_err(|e| Error::Malformed(format!("group or field element: {e}")))?;
        if !b.is_empty() {
            return Err(Error::Malformed("oversized element encoding".into()));
        }
        Ok(v)
    }

    fn vec3<G: ark_ec::AffineRepr>(&mut self) -> Result<GroupVec<G>> {
        Ok(GroupVec::from_elems(
            (0..DIM).map(|_| self.elem()).collect::<Result<_>>()?,
        ))
    }

    fn basis<G: ark_ec::AffineRepr>(&mut self) -> Result<Basis<G>> {
        Basis::from_columns((0..DIM).map(|_| self.vec3()).collect::<Result<_>>()?)
    }

    /// Strictly increasing indices below `bound`.
    fn indices(&mut self, bound: usize) -> Result<Vec<usize>> {
        let n = self.count(1)?;
        let idx = (0..n).map(|_| self.usize()).collect::<Result<Vec<_>>>()?;
        check_indices(&idx, bound)?;
        Ok(idx)
    }

    fn family(&mut self) -> Result<FamilyId> {
        let b = self.bytes()?;
        Ok(FamilyId(b.try_into().map_err(|_| {
            Error::Malformed(format!("family id of {} bytes", b.len()))
        })?))
    }
}

fn check_indices(idx: &[usize], bound: usize) -> Result<()> {
    if idx.windows(2).any(|w| w[0] >= w[1]) || idx.last().is_some_and(|&i| i >= bound) {
        return Err(Error::Malformed(format!(
            "bad index list {idx:?} (bound {bound})"
        )));
    }
    Ok(())
}

fn malformed_if(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Err(Error::Malformed(msg()))
    } else {
        Ok(())
    }
}

// ---- basic scheme ----

fn write_mpk<E: Backend>(w: &mut FieldWriter, k: &MasterPublicKey<E>) {
    w.elem(&k.gt);
    w.basis(&k.zero);
    w.usize(k.slots.len());
    for b in &k.slots {
        w.basis(b);
    }
}

fn read_mpk<E: Backend>(r: &mut FieldReader<'_>) -> Result<MasterPublicKey<E>> {
    let gt: Gt<E> = r.elem()?;
    let zero: LeftBasis<E> = r.basis()?;
    let n = r.count(DIM * DIM)?;
    let slots = (0..n).map(|_| r.basis()).collect::<Result<_>>()?;
    Ok(MasterPublicKey { gt, zero, slots })
}

fn write_msk<E: Backend>(w: &mut FieldWriter, k: &MasterSecretKey<E>) {
    w.basis(&k.zero);
    w.usize(k.slots.len());
    for b in &k.slots {
        w.basis(b);
    }
}

fn read_msk<E: Backend>(r: &mut FieldReader<'_>) -> Result<MasterSecretKey<E>> {
    let zero: RightBasis<E> = r.basis()?;
    let n = r.count(DIM * DIM)?;
    let slots = (0..n).map(|_| r.basis()).collect::<Result<_>>()?;
    Ok(MasterSecretKey { zero, slots })
}

fn write_attrs<E: Backend>(w: &mut FieldWriter, a: &AttributeBlock<E>) {
    w.vec3(&a.c0);
    w.usize(a.cts.len());
    for c in &a.cts {
        w.vec3(c);
    }
}

fn read_attrs<E: Backend>(r: &mut FieldReader<'_>) -> Result<AttributeBlock<E>> {
    let c0: LeftVec<E> = r.vec3()?;
    let n = r.count(DIM)?;
    let cts = (0..n).map(|_| r.vec3()).collect::<Result<_>>()?;
    Ok(AttributeBlock { c0, cts })
}

fn write_hve_key<E: Backend>(w: &mut FieldWriter, k: &HveKey<E>) {
    w.usize(k.ell);
    w.vec3(&k.k0);
    w.indices(&k.kts.keys().copied().collect::<Vec<_>>());
    for v in k.kts.values() {
        w.vec3(v);
    }
}

fn read_hve_key<E: Backend>(r: &mut FieldReader<'_>) -> Result<HveKey<E>> {
    let ell = r.usize()?;
    let k0: RightVec<E> = r.vec3()?;
    let support = r.indices(ell)?;
    let kts = support
        .into_iter()
        .map(|t| Ok((t, r.vec3()?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(HveKey { ell, k0, kts })
}

impl<E: Backend> Record<E> for MasterPublicKey<E> {
    const KIND: RecordKind = RecordKind::BasicPublicKey;
    fn write_body(&self, w: &mut FieldWriter) {
        write_mpk(w, self);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        read_mpk(r)
    }
}

impl<E: Backend> Record<E> for MasterSecretKey<E> {
    const KIND: RecordKind = RecordKind::BasicSecretKey;
    fn write_body(&self, w: &mut FieldWriter) {
        write_msk(w, self);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        read_msk(r)
    }
}

impl<E: Backend> Record<E> for HveCiphertext<E> {
    const KIND: RecordKind = RecordKind::BasicCiphertext;
    fn write_body(&self, w: &mut FieldWriter) {
        w.elem(&self.c);
        write_attrs(w, &self.attrs);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        Ok(HveCiphertext {
            c: r.elem()?,
            attrs: read_attrs(r)?,
        })
    }
}

impl<E: Backend> Record<E> for HveKey<E> {
    const KIND: RecordKind = RecordKind::BasicKey;
    fn write_body(&self, w: &mut FieldWriter) {
        write_hve_key(w, self);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        read_hve_key(r)
    }
}

// ---- amortized scheme ----

impl<E: Backend> Record<E> for AmortizedPublicKey<E> {
    const KIND: RecordKind = RecordKind::PublicKey;
    fn write_body(&self, w: &mut FieldWriter) {
        w.bytes(&self.family.0);
        write_mpk(w, &self.prefix);
        w.basis(&self.zero_star);
        w.basis(&self.tail);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        Ok(AmortizedPublicKey {
            family: r.family()?,
            prefix: read_mpk(r)?,
            zero_star: r.basis()?,
            tail: r.basis()?,
        })
    }
}

impl<E: Backend> Record<E> for AmortizedSecretKey<E> {
    const KIND: RecordKind = RecordKind::SecretKey;
    fn write_body(&self, w: &mut FieldWriter) {
        w.bytes(&self.family.0);
        write_msk(w, &self.prefix);
        w.basis(&self.zero_star);
        w.basis(&self.tail);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        Ok(AmortizedSecretKey {
            family: r.family()?,
            prefix: read_msk(r)?,
            zero_star: r.basis()?,
            tail: r.basis()?,
        })
    }
}

fn write_am_ct<E: Backend>(w: &mut FieldWriter, ct: &AmortizedCiphertext<E>) {
    write_attrs(w, &ct.shared);
    w.usize(ct.blocks.len());
    for b in &ct.blocks {
        w.elem(&b.c);
        w.vec3(&b.c0);
        w.vec3(&b.ctail);
    }
}

fn read_am_ct<E: Backend>(r: &mut FieldReader<'_>) -> Result<AmortizedCiphertext<E>> {
    let shared = read_attrs(r)?;
    let n = r.count(1 + 2 * DIM)?;
    let blocks = (0..n)
        .map(|_| {
            Ok(CiphertextBlock {
                c: r.elem()?,
                c0: r.vec3()?,
                ctail: r.vec3()?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AmortizedCiphertext { shared, blocks })
}

fn write_am_key<E: Backend>(w: &mut FieldWriter, k: &AmortizedKey<E>) {
    write_hve_key(w, &k.prefix);
    w.vec3(&k.k0_star);
    w.vec3(&k.ktail);
}

fn read_am_key<E: Backend>(r: &mut FieldReader<'_>) -> Result<AmortizedKey<E>> {
    Ok(AmortizedKey {
        prefix: read_hve_key(r)?,
        k0_star: r.vec3()?,
        ktail: r.vec3()?,
    })
}

fn write_param_key<E: Backend>(w: &mut FieldWriter, k: &ParametricKey<E>) {
    w.usize(k.ell);
    w.vec3(&k.k0);
    w.indices(&k.open_slots());
    for slot in k.open.values() {
        w.vec3(&slot.scalable);
        w.vec3(&slot.fixed);
    }
    w.vec3(&k.k0_star);
    w.vec3(&k.ktail);
}

fn read_param_key<E: Backend>(r: &mut FieldReader<'_>) -> Result<ParametricKey<E>> {
    let ell = r.usize()?;
    let k0 = r.vec3()?;
    let slots = r.indices(ell)?;
    let open = slots
        .into_iter()
        .map(|t| {
            Ok((
                t,
                ParamSlot {
                    scalable: r.vec3()?,
                    fixed: r.vec3()?,
                },
            ))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(ParametricKey {
        ell,
        k0,
        open,
        k0_star: r.vec3()?,
        ktail: r.vec3()?,
    })
}

impl<E: Backend> Record<E> for AmortizedCiphertext<E> {
    const KIND: RecordKind = RecordKind::Ciphertext;
    fn write_body(&self, w: &mut FieldWriter) {
        write_am_ct(w, self);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        read_am_ct(r)
    }
}

impl<E: Backend> Record<E> for AmortizedKey<E> {
    const KIND: RecordKind = RecordKind::Key;
    fn write_body(&self, w: &mut FieldWriter) {
        write_am_key(w, self);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        read_am_key(r)
    }
}

impl<E: Backend> Record<E> for ParametricKey<E> {
    const KIND: RecordKind = RecordKind::ParametricKey;
    fn write_body(&self, w: &mut FieldWriter) {
        write_param_key(w, self);
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        read_param_key(r)
    }
}

// ---- table records ----

impl<E: Backend> Record<E> for QueryToken<E> {
    const KIND: RecordKind = RecordKind::Token;
    fn write_body(&self, w: &mut FieldWriter) {
        w.bytes(&self.family.0);
        w.usize(self.arity);
        w.indices(&self.predicate_columns);
        w.indices(&self.projected);
        for k in &self.keys {
            write_am_key(w, k);
        }
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        let family = r.family()?;
        let arity = r.usize()?;
        let predicate_columns = r.indices(arity)?;
        let projected = r.indices(arity)?;
        malformed_if(projected.is_empty(), || "token projects no column".into())?;
        let keys = projected
            .iter()
            .map(|_| read_am_key(r))
            .collect::<Result<Vec<AmortizedKey<E>>>>()?;
        for k in &keys {
            malformed_if(
                k.ell() != arity
                    || !k
                        .prefix
                        .kts
                        .keys()
                        .copied()
                        .eq(predicate_columns.iter().copied()),
                || "token key does not match the token's predicate columns".into(),
            )?;
        }
        Ok(QueryToken {
            family,
            arity,
            predicate_columns,
            projected,
            keys,
        })
    }
}

impl<E: Backend> Record<E> for ParametricToken<E> {
    const KIND: RecordKind = RecordKind::ParametricToken;
    fn write_body(&self, w: &mut FieldWriter) {
        w.bytes(&self.family.0);
        w.usize(self.arity);
        w.indices(&self.predicate_columns);
        w.indices(&self.projected);
        for k in &self.keys {
            write_param_key(w, k);
        }
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        let family = r.family()?;
        let arity = r.usize()?;
        let predicate_columns = r.indices(arity)?;
        let projected = r.indices(arity)?;
        malformed_if(projected.is_empty(), || "token projects no column".into())?;
        let keys = projected
            .iter()
            .map(|_| read_param_key(r))
            .collect::<Result<Vec<ParametricKey<E>>>>()?;
        for k in &keys {
            malformed_if(
                k.ell != arity || !k.open.keys().copied().eq(predicate_columns.iter().copied()),
                || "parametric key does not match the token's predicate columns".into(),
            )?;
        }
        Ok(ParametricToken {
            family,
            arity,
            predicate_columns,
            projected,
            keys,
        })
    }
}

/// Concatenated check tags, as kept in the store.
pub fn key_checks_to_bytes(checks: &[KeyCheck]) -> Vec<u8> {
    checks.concat()
}

pub fn key_checks_from_bytes(bytes: &[u8]) -> Result<Vec<KeyCheck>> {
    malformed_if(!bytes.len().is_multiple_of(KEY_CHECK_LEN), || {
        format!("key check blob of {} bytes", bytes.len())
    })?;
    Ok(bytes
        .chunks_exact(KEY_CHECK_LEN)
        .map(|c| c.try_into().expect("exact chunk"))
        .collect())
}

impl<E: Backend> Record<E> for WrappedRow<E> {
    const KIND: RecordKind = RecordKind::WrappedRow;
    fn write_body(&self, w: &mut FieldWriter) {
        w.u64(self.row_id);
        w.usize(self.cells.len());
        for c in &self.cells {
            w.bytes(&c.to_bytes());
        }
        write_am_ct(w, &self.keyblock);
        w.bytes(&key_checks_to_bytes(&self.key_checks));
    }
    fn read_body(r: &mut FieldReader<'_>) -> Result<Self> {
        let row_id = r.u64()?;
        let n = r.count(1)?;
        let cells = (0..n)
            .map(|_| SealedCell::from_bytes(r.bytes()?))
            .collect::<Result<Vec<_>>>()?;
        let keyblock: AmortizedCiphertext<E> = read_am_ct(r)?;
        let key_checks = key_checks_from_bytes(r.bytes()?)?;
        malformed_if(keyblock.num_blocks() != n || key_checks.len() != n, || {
            "cell, block and check counts disagree".into()
        })?;
        Ok(WrappedRow {
            row_id,
            cells,
            keyblock,
            key_checks,
        })
    }
}
