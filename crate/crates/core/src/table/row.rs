use rand::Rng;

use super::cell::{derive_cell_secrets, open_cell, seal_cell, CellKey, KeyCheck, SealedCell};
use super::encode::{encode_column, encode_value};
use crate::dpvs::{nonzero_scalar, Scalar};
use crate::error::{ensure_len, Error, Result};
use crate::hve_amortized::{
    decrypt_block, encrypt_am_with_coins, shared_factor, AmortizedCiphertext,
    AmortizedEncryptCoins, AmortizedKey, AmortizedPublicKey,
};
use crate::metrics::Meter;
use crate::Backend;

/// An encrypted row: one sealed cell per column, the amortized ciphertext
/// wrapping the per-cell payloads, and one check tag per cell key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrappedRow<E: Backend> {
    pub row_id: u64,
    pub cells: Vec<SealedCell>,
    pub keyblock: AmortizedCiphertext<E>,
    pub key_checks: Vec<KeyCheck>,
}

impl<E: Backend> WrappedRow<E> {
    pub fn arity(&self) -> usize {
        self.cells.len()
    }
}

pub fn encrypt_row<E: Backend, V: AsRef<[u8]>, R: Rng + ?Sized>(
    row: &[V],
    row_id: u64,
    mpk: &AmortizedPublicKey<E>,
    rng: &mut R,
) -> Result<WrappedRow<E>> {
    encrypt_row_metered(row, row_id, mpk, rng, &())
}

/// Samples one uniform payload per column, derives the cell keys from
/// them, seals the cells, and wraps the payloads under attributes
/// `(encode(v_1), .., encode(v_l))` with tail `encode_column(j)` for block `j`.
pub fn encrypt_row_metered<E: Backend, V: AsRef<[u8]>, R: Rng + ?Sized, M: Meter + ?Sized>(
    row: &[V],
    row_id: u64,
    mpk: &AmortizedPublicKey<E>,
    rng: &mut R,
    meter: &M,
) -> Result<WrappedRow<E>> {
    ensure_len("row arity", mpk.ell(), row.len())?;
    if row_id == 0 {
        return Err(Error::invalid("row ids start at 1"));
    }
    let l = row.len();
    let payloads: Vec<_> = (0..l)
        .map(|_| *mpk.gt() * nonzero_scalar::<Scalar<E>, R>(rng))
        .collect();
    let mut cells = Vec::with_capacity(l);
    let mut key_checks = Vec::with_capacity(l);
    for (j, (m, v)) in payloads.iter().zip(row).enumerate() {
        let (key, check) = derive_cell_secrets::<E>(m, row_id, j);
        cells.push(seal_cell(&key, row_id, j, v.as_ref(), rng));
        key_checks.push(check);
    }
    let attrs: Vec<Scalar<E>> = row.iter().map(|v| encode_value(v.as_ref())).collect();
    let tails: Vec<Scalar<E>> = (0..l).map(encode_column).collect();
    let coins = AmortizedEncryptCoins::<Scalar<E>>::sample(l, l, rng);
    let keyblock = encrypt_am_with_coins(&payloads, &attrs, &tails, mpk, &coins, meter)?;
    Ok(WrappedRow {
        row_id,
        cells,
        keyblock,
        key_checks,
    })
}

/// Decrypts block `column` of a keyblock and derives the cell key. Returns
/// `None` when the derived check tag disagrees with the stored one, which
/// is what a non-matching key produces.
pub fn unwrap_cell_key<E: Backend, M: Meter + ?Sized>(
    key: &AmortizedKey<E>,
    row_id: u64,
    keyblock: &AmortizedCiphertext<E>,
    key_checks: &[KeyCheck],
    column: usize,
    meter: &M,
) -> Result<Option<CellKey>> {
    ensure_len("key check tags", keyblock.num_blocks(), key_checks.len())?;
    let shared = shared_factor(key, keyblock, meter)?;
    let m = decrypt_block(&shared, key, keyblock, column, meter)?;
    let (cell_key, check) = derive_cell_secrets::<E>(&m, row_id, column);
    Ok((check == key_checks[column]).then_some(cell_key))
}

/// Recovers the key for cell `column` and verifies it against the sealed
/// cell. `None` means the row is not selected by `key`.
pub fn try_unwrap_with_key<E: Backend>(
    key: &AmortizedKey<E>,
    wrapped: &WrappedRow<E>,
    column: usize,
) -> Result<Option<CellKey>> {
    let cell = wrapped.cells.get(column).ok_or_else(|| {
        Error::invalid(format!(
            "column {column} out of range ({} columns)",
            wrapped.arity()
        ))
    })?;
    let candidate = unwrap_cell_key(
        key,
        wrapped.row_id,
        &wrapped.keyblock,
        &wrapped.key_checks,
        column,
        &(),
    )?;
    Ok(candidate.filter(|k| open_cell(k, wrapped.row_id, column, cell).is_some()))
}

/// Draws a fresh per-row seed so rows can be encrypted independently.
pub(crate) fn row_seed<R: Rng + ?Sized>(rng: &mut R) -> [u8; 32] {
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    seed
}
