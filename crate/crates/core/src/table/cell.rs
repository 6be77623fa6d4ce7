//! Bridge from target-group payloads to symmetric cell encryption.
//!
//! Each payload `m_j` feeds HKDF-SHA256 to produce a 256-bit AES-GCM key
//! for cell `j` and a 16-byte check tag. A payload recovered from a
//! non-matching row is an unrelated group element, so both the derived key
//! and the tag are useless and AEAD verification fails.

use std::fmt;

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Key, Nonce};
use ark_ec::pairing::Pairing;
use ark_serialize::CanonicalSerialize;
use hkdf::Hkdf;
use rand::Rng;
use sha2::Sha256;

use crate::dpvs::Gt;
use crate::error::{Error, Result};

pub const NONCE_LEN: usize = 12;
pub const KEY_CHECK_LEN: usize = 16;

const KDF_SALT: &[u8] = b"hvedb/cell-key/v1";

#[derive(Clone, PartialEq, Eq)]
pub struct CellKey([u8; 32]);

impl CellKey {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CellKey(..)")
    }
}

pub type KeyCheck = [u8; KEY_CHECK_LEN];

/// One AEAD-encrypted cell: nonce plus ciphertext with appended tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SealedCell {
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
}

impl SealedCell {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(NONCE_LEN + self.ciphertext.len());
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < NONCE_LEN + 16 {
            return Err(Error::Malformed(format!(
                "sealed cell too short ({} bytes)",
                bytes.len()
            )));
        }
        let (nonce, ct) = bytes.split_at(NONCE_LEN);
        Ok(SealedCell {
            nonce: nonce.try_into().expect("split at NONCE_LEN"),
            ciphertext: ct.to_vec(),
        })
    }
}

fn context(row_id: u64, column: usize) -> [u8; 12] {
    let mut ctx = [0u8; 12];
    ctx[..8].copy_from_slice(&row_id.to_be_bytes());
    ctx[8..].copy_from_slice(&(column as u32).to_be_bytes());
    ctx
}

/// Cell key and check tag for payload `m` of row `row_id`, column `column`.
pub fn derive_cell_secrets<E: Pairing>(
    m: &Gt<E>,
    row_id: u64,
    column: usize,
) -> (CellKey, KeyCheck) {
    let mut ikm = Vec::with_capacity(m.compressed_size());
    m.serialize_compressed(&mut ikm)
        .expect("serializing into a Vec cannot fail");
    let hk = Hkdf::<Sha256>::new(Some(KDF_SALT), &ikm);
    let ctx = context(row_id, column);
    let mut key = [0u8; 32];
    let mut check = [0u8; KEY_CHECK_LEN];
    hk.expand_multi_info(&[b"key", &ctx], &mut key)
        .expect("32 bytes is a valid HKDF length");
    hk.expand_multi_info(&[b"check", &ctx], &mut check)
        .expect("16 bytes is a valid HKDF length");
    (CellKey(key), check)
}

/// AES-256-GCM with a fresh random nonce; the row id and column are bound
/// as associated data.
pub fn seal_cell<R: Rng + ?Sized>(
    key: &CellKey,
    row_id: u64,
    column: usize,
    plaintext: &[u8],
    rng: &mut R,
) -> SealedCell {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let cipher = Aes256Gcm::new(&Key::<Aes256Gcm>::from(key.0));
    let aad = context(row_id, column);
    let ciphertext = cipher
        .encrypt(
            &Nonce::from(nonce),
            Payload {
                msg: plaintext,
                aad: &aad,
            },
        )
        .expect("AES-GCM encryption of in-memory data cannot fail");
    SealedCell { nonce, ciphertext }
}

/// `None` on authentication failure.
pub fn open_cell(key: &CellKey, row_id: u64, column: usize, cell: &SealedCell) -> Option<Vec<u8>> {
    let cipher = Aes256Gcm::new(&Key::<Aes256Gcm>::from(key.0));
    let aad = context(row_id, column);
    cipher
        .decrypt(
            &Nonce::from(cell.nonce),
            Payload {
                msg: &cell.ciphertext,
                aad: &aad,
            },
        )
        .ok()
}
