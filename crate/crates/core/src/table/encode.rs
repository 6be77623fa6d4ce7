//! Hashing cell values and column positions into the scalar field.

use ark_ff::PrimeField;
use sha2::{Digest, Sha512};

const DOMAIN: &[u8] = b"hvedb/encode/v1";
const VALUE_TAG: u8 = 0x00;
const COLUMN_TAG: u8 = 0x01;

/// Deterministic map from a byte string to `F_q`: SHA-512 reduced mod `q`,
/// so the bias is below `2^-256` for 256-bit fields.
pub fn encode_value<F: PrimeField>(value: &[u8]) -> F {
    hash_to_field(VALUE_TAG, value)
}

/// Encoding of a column position, used as the per-block tail attribute.
/// Tagged separately from values so the two domains never collide.
pub fn encode_column<F: PrimeField>(column: usize) -> F {
    hash_to_field(COLUMN_TAG, format!("col:{column}").as_bytes())
}

fn hash_to_field<F: PrimeField>(tag: u8, bytes: &[u8]) -> F {
    let mut h = Sha512::new();
    h.update(DOMAIN);
    h.update([tag]);
    h.update(bytes);
    F::from_le_bytes_mod_order(&h.finalize())
}
