//! Amortized HVE: `n` payloads sharing an `ell`-slot attribute prefix and
//! differing only in one tail attribute, encrypted in `Theta(ell + n)`
//! group elements.
//!
//! Besides the basic scheme's pairs, the master keys hold two more pairs
//! under the same psi: `zero_star` (blinding for the per-block part) and
//! `tail` (the per-block attribute).

mod parametric;

pub use parametric::{
    bind_parameters, keygen_parametric, keygen_parametric_with_coins, ParamSlot, ParametricKey,
};

use std::fmt;

use ark_ec::pairing::Pairing;
use ark_ff::{One, UniformRand, Zero};
use rand::Rng;

use crate::dpvs::{lincomb, pair_product, Gt, LeftBasis, LeftVec, RightBasis, RightVec, Scalar};
use crate::error::{ensure_len, Error, Result};
use crate::hve_basic::{
    attrs_factor, encrypt_attrs, keygen_with_coins, sample_pairs, AttributeBlock, EncryptCoins,
    HveKey, KeyCoins, MasterPublicKey, MasterSecretKey, Pattern,
};
use crate::metrics::Meter;

/// Random identifier minted at setup and carried by every artifact derived
/// from one pair of master keys.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FamilyId(pub [u8; 16]);

impl FamilyId {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut id = [0u8; 16];
        rng.fill_bytes(&mut id);
        FamilyId(id)
    }
}

impl fmt::Debug for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FamilyId({self})")
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmortizedPublicKey<E: Pairing> {
    pub family: FamilyId,
    pub prefix: MasterPublicKey<E>,
    pub zero_star: LeftBasis<E>,
    pub tail: LeftBasis<E>,
}

impl<E: Pairing> AmortizedPublicKey<E> {
    pub fn ell(&self) -> usize {
        self.prefix.ell()
    }

    pub fn gt(&self) -> &Gt<E> {
        &self.prefix.gt
    }

    pub fn num_group_elems(&self) -> usize {
        self.prefix.num_group_elems() + 18
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmortizedSecretKey<E: Pairing> {
    pub family: FamilyId,
    pub prefix: MasterSecretKey<E>,
    pub zero_star: RightBasis<E>,
    pub tail: RightBasis<E>,
}

impl<E: Pairing> AmortizedSecretKey<E> {
    pub fn ell(&self) -> usize {
        self.prefix.ell()
    }
}

#[derive(Clone, Debug)]
pub struct AmortizedMasterKeys<E: Pairing> {
    pub mpk: AmortizedPublicKey<E>,
    pub msk: AmortizedSecretKey<E>,
}

/// Per-payload part `(c^j, c_0^j, c_tail^j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiphertextBlock<E: Pairing> {
    pub c: Gt<E>,
    pub c0: LeftVec<E>,
    pub ctail: LeftVec<E>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmortizedCiphertext<E: Pairing> {
    pub shared: AttributeBlock<E>,
    pub blocks: Vec<CiphertextBlock<E>>,
}

impl<E: Pairing> AmortizedCiphertext<E> {
    pub fn ell(&self) -> usize {
        self.shared.ell()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Source-group elements: `3(ell + 1) + 6n`.
    pub fn num_group_elems(&self) -> usize {
        self.shared.num_group_elems()
            + self
                .blocks
                .iter()
                .map(|b| b.c0.len() + b.ctail.len())
                .sum::<usize>()
    }

    /// Target-group elements: `n`.
    pub fn num_gt_elems(&self) -> usize {
        self.blocks.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmortizedKey<E: Pairing> {
    pub prefix: HveKey<E>,
    pub k0_star: RightVec<E>,
    pub ktail: RightVec<E>,
}

impl<E: Pairing> AmortizedKey<E> {
    pub fn ell(&self) -> usize {
        self.prefix.ell
    }

    /// `3(|S| + 1) + 6`.
    pub fn num_group_elems(&self) -> usize {
        self.prefix.num_group_elems() + self.k0_star.len() + self.ktail.len()
    }
}

/// Randomness for one ciphertext block: `z^j, w^j, w_0^j`.
#[derive(Clone, Copy, Debug)]
pub struct BlockCoins<F> {
    pub z: F,
    pub w: F,
    pub w0: F,
}

#[derive(Clone, Debug)]
pub struct AmortizedEncryptCoins<F> {
    pub shared: EncryptCoins<F>,
    pub blocks: Vec<BlockCoins<F>>,
}

impl<F: UniformRand> AmortizedEncryptCoins<F> {
    pub fn sample<R: Rng + ?Sized>(ell: usize, n: usize, rng: &mut R) -> Self {
        let shared = EncryptCoins::sample(ell, rng);
        let blocks = (0..n)
            .map(|_| BlockCoins {
                z: F::rand(rng),
                w: F::rand(rng),
                w0: F::rand(rng),
            })
            .collect();
        AmortizedEncryptCoins { shared, blocks }
    }
}

/// Randomness for the tail components of a key: `s_0*, eta*, d_tail`.
#[derive(Clone, Copy, Debug)]
pub struct TailCoins<F> {
    pub s0_star: F,
    pub eta_star: F,
    pub d: F,
}

impl<F: UniformRand> TailCoins<F> {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        TailCoins {
            s0_star: F::rand(rng),
            eta_star: F::rand(rng),
            d: F::rand(rng),
        }
    }
}

/// `e(c_0, k_0) * prod_{t in S} e(c_t, k_t)` for one key and ciphertext;
/// equals `g_T^z` on a match and is reusable across all blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SharedFactor<E: Pairing>(pub Gt<E>);

pub fn setup_am<E: Pairing, R: Rng + ?Sized>(
    ell: usize,
    rng: &mut R,
) -> Result<AmortizedMasterKeys<E>> {
    setup_am_metered(ell, rng, &())
}

/// `ell + 3` dual pairs under one psi: `0`, `1..ell`, tail, `0*`.
pub fn setup_am_metered<E: Pairing, R: Rng + ?Sized, M: Meter + ?Sized>(
    ell: usize,
    rng: &mut R,
    meter: &M,
) -> Result<AmortizedMasterKeys<E>> {
    if ell == 0 {
        return Err(Error::invalid("attribute count must be at least 1"));
    }
    let family = FamilyId::random(rng);
    let (gt, pairs) = sample_pairs::<E, R, M>(ell + 3, rng, meter)?;
    let mut pairs = pairs.into_iter();
    let (b0, c0) = pairs.next().expect("pair 0");
    let (bs, cs): (Vec<_>, Vec<_>) = pairs.by_ref().take(ell).unzip();
    let (b_tail, c_tail) = pairs.next().expect("tail pair");
    let (b0s, c0s) = pairs.next().expect("0* pair");
    Ok(AmortizedMasterKeys {
        mpk: AmortizedPublicKey {
            family,
            prefix: MasterPublicKey {
                gt,
                zero: b0,
                slots: bs,
            },
            zero_star: b0s,
            tail: b_tail,
        },
        msk: AmortizedSecretKey {
            family,
            prefix: MasterSecretKey {
                zero: c0,
                slots: cs,
            },
            zero_star: c0s,
            tail: c_tail,
        },
    })
}

pub fn encrypt_am<E: Pairing, R: Rng + ?Sized>(
    msgs: &[Gt<E>],
    shared_attrs: &[Scalar<E>],
    tail_attrs: &[Scalar<E>],
    mpk: &AmortizedPublicKey<E>,
    rng: &mut R,
) -> Result<AmortizedCiphertext<E>> {
    let coins = AmortizedEncryptCoins::sample(mpk.ell(), msgs.len(), rng);
    encrypt_am_with_coins(msgs, shared_attrs, tail_attrs, mpk, &coins, &())
}

/// Shared part exactly as in the basic scheme; block `j` is
/// `c^j = g_T^(z + z^j) m^j`, `c_0^j = (w_0^j, z^j, 0)_{B^0*}`,
/// `c_tail^j = (w^j, w^j x^j, w_0^j)_{B^tail}`.
pub fn encrypt_am_with_coins<E: Pairing, M: Meter + ?Sized>(
    msgs: &[Gt<E>],
    shared_attrs: &[Scalar<E>],
    tail_attrs: &[Scalar<E>],
    mpk: &AmortizedPublicKey<E>,
    coins: &AmortizedEncryptCoins<Scalar<E>>,
    meter: &M,
) -> Result<AmortizedCiphertext<E>> {
    if msgs.is_empty() {
        return Err(Error::invalid(
            "amortized encryption needs at least one payload",
        ));
    }
    ensure_len("tail attributes", msgs.len(), tail_attrs.len())?;
    ensure_len("block coins", msgs.len(), coins.blocks.len())?;
    let shared = encrypt_attrs(
        shared_attrs,
        &mpk.prefix.zero,
        &mpk.prefix.slots,
        &coins.shared,
        meter,
    )?;
    let z = coins.shared.z;
    let blocks = msgs
        .iter()
        .zip(tail_attrs)
        .zip(&coins.blocks)
        .map(|((m, x), bc)| {
            Ok(CiphertextBlock {
                c: mpk.prefix.gt * (z + bc.z) + m,
                c0: lincomb(&[bc.w0, bc.z, Scalar::<E>::zero()], &mpk.zero_star)?,
                ctail: lincomb(&[bc.w, bc.w * x, bc.w0], &mpk.tail)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    meter.gt_exps(msgs.len() as u64);
    meter.lincombs(2 * msgs.len() as u64);
    Ok(AmortizedCiphertext { shared, blocks })
}

pub fn keygen_am<E: Pairing, R: Rng + ?Sized>(
    pattern: &Pattern<Scalar<E>>,
    tail_value: Scalar<E>,
    msk: &AmortizedSecretKey<E>,
    rng: &mut R,
) -> Result<AmortizedKey<E>> {
    let coins = KeyCoins::sample(&pattern.support(), rng);
    let tail = TailCoins::sample(rng);
    keygen_am_with_coins(pattern, tail_value, msk, &coins, &tail, &())
}

/// Prefix components as in the basic scheme, plus
/// `k_0* = (s_0*, 1, eta*)_{C^0*}` and
/// `k_tail = (d y_tail, -d, -s_0*)_{C^tail}`.
pub fn keygen_am_with_coins<E: Pairing, M: Meter + ?Sized>(
    pattern: &Pattern<Scalar<E>>,
    tail_value: Scalar<E>,
    msk: &AmortizedSecretKey<E>,
    coins: &KeyCoins<Scalar<E>>,
    tail: &TailCoins<Scalar<E>>,
    meter: &M,
) -> Result<AmortizedKey<E>> {
    let prefix = keygen_with_coins(pattern, &msk.prefix, coins, meter)?;
    let (k0_star, ktail) = tail_components(tail_value, msk, tail, meter)?;
    Ok(AmortizedKey {
        prefix,
        k0_star,
        ktail,
    })
}

pub(crate) fn tail_components<E: Pairing, M: Meter + ?Sized>(
    tail_value: Scalar<E>,
    msk: &AmortizedSecretKey<E>,
    tail: &TailCoins<Scalar<E>>,
    meter: &M,
) -> Result<(RightVec<E>, RightVec<E>)> {
    let k0_star = lincomb(
        &[tail.s0_star, Scalar::<E>::one(), tail.eta_star],
        &msk.zero_star,
    )?;
    let ktail = lincomb(&[tail.d * tail_value, -tail.d, -tail.s0_star], &msk.tail)?;
    meter.lincombs(2);
    Ok((k0_star, ktail))
}

pub fn shared_factor<E: Pairing, M: Meter + ?Sized>(
    key: &AmortizedKey<E>,
    ct: &AmortizedCiphertext<E>,
    meter: &M,
) -> Result<SharedFactor<E>> {
    attrs_factor(&key.prefix, &ct.shared, meter).map(SharedFactor)
}

/// Block `j` (0-based) using a precomputed shared factor.
pub fn decrypt_block<E: Pairing, M: Meter + ?Sized>(
    shared: &SharedFactor<E>,
    key: &AmortizedKey<E>,
    ct: &AmortizedCiphertext<E>,
    j: usize,
    meter: &M,
) -> Result<Gt<E>> {
    let block = ct.blocks.get(j).ok_or_else(|| {
        Error::invalid(format!(
            "block index {j} out of range ({} blocks)",
            ct.blocks.len()
        ))
    })?;
    let tail = pair_product::<E, M>(
        &[(&block.c0, &key.k0_star), (&block.ctail, &key.ktail)],
        meter,
    )?;
    Ok(block.c - (shared.0 + tail))
}

/// Recovers payload `j` (0-based) when the prefix matches the key's
/// pattern and block `j`'s tail attribute equals the key's tail value.
pub fn decrypt_am<E: Pairing>(
    key: &AmortizedKey<E>,
    ct: &AmortizedCiphertext<E>,
    j: usize,
) -> Result<Gt<E>> {
    if j >= ct.blocks.len() {
        return Err(Error::invalid(format!(
            "block index {j} out of range ({} blocks)",
            ct.blocks.len()
        )));
    }
    let shared = shared_factor(key, ct, &())?;
    decrypt_block(&shared, key, ct, j, &())
}

/// Every block under one key, computing the shared factor once.
pub fn decrypt_all<E: Pairing, M: Meter + ?Sized>(
    key: &AmortizedKey<E>,
    ct: &AmortizedCiphertext<E>,
    meter: &M,
) -> Result<Vec<Gt<E>>> {
    let shared = shared_factor(key, ct, meter)?;
    (0..ct.blocks.len())
        .map(|j| decrypt_block(&shared, key, ct, j, meter))
        .collect()
}
