//! Table encryption and query tokens.
//!
//! A row `<v_1, .., v_l>` is sealed cell by cell under fresh AEAD keys; the
//! keys are carried by an amortized HVE ciphertext whose shared attributes
//! are the encoded row values and whose block `j` has the encoded column
//! position as tail attribute. A token for a query holds one key per
//! projected column.

mod cell;
mod encode;
mod row;
mod token;

pub use cell::{
    derive_cell_secrets, open_cell, seal_cell, CellKey, KeyCheck, SealedCell, KEY_CHECK_LEN,
    NONCE_LEN,
};
pub use encode::{encode_column, encode_value};
pub use row::{encrypt_row, encrypt_row_metered, try_unwrap_with_key, unwrap_cell_key, WrappedRow};
pub use token::{make_parametric_token, make_token, ParametricToken, QueryToken};

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hve_amortized::AmortizedPublicKey;
use crate::Backend;

/// Plaintext table: named columns and rectangular byte-string rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainTable {
    columns: Vec<String>,
    rows: Vec<Vec<Vec<u8>>>,
}

impl PlainTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Vec<u8>>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("a table needs at least one column"));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.to_ascii_lowercase()) {
                return Err(Error::invalid(format!("duplicate column name `{c}`")));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(Error::invalid(format!(
                    "row {} has {} values, expected {}",
                    i + 1,
                    r.len(),
                    columns.len()
                )));
            }
        }
        Ok(PlainTable { columns, rows })
    }

    /// Comma-separated input with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let columns = rdr
            .headers()
            .map_err(csv_error)?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let rows = rdr
            .byte_records()
            .map(|rec| rec.map(|r| r.iter().map(<[u8]>::to_vec).collect()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(csv_error)?;
        Self::new(columns, rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Vec<u8>>] {
        &self.rows
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
    }

    /// Total bytes of cell values.
    pub fn payload_bytes(&self) -> usize {
        self.rows.iter().flatten().map(Vec::len).sum()
    }

    /// Encrypts every row in parallel with ids `1..=u`.
    pub fn encrypt<E: Backend, R: Rng + ?Sized>(
        &self,
        mpk: &AmortizedPublicKey<E>,
        rng: &mut R,
    ) -> Result<Vec<WrappedRow<E>>> {
        self.encrypt_from(1, mpk, rng)
    }

    /// Like [`encrypt`](Self::encrypt) with ids starting at `first_id`.
    pub fn encrypt_from<E: Backend, R: Rng + ?Sized>(
        &self,
        first_id: u64,
        mpk: &AmortizedPublicKey<E>,
        rng: &mut R,
    ) -> Result<Vec<WrappedRow<E>>> {
        if first_id == 0 {
            return Err(Error::invalid("row ids start at 1"));
        }
        let seeds: Vec<[u8; 32]> = self.rows.iter().map(|_| row::row_seed(rng)).collect();
        self.rows
            .par_iter()
            .zip(seeds)
            .enumerate()
            .map(|(i, (row, seed))| {
                let mut row_rng = ChaCha20Rng::from_seed(seed);
                encrypt_row(row, first_id + i as u64, mpk, &mut row_rng)
            })
            .collect()
    }
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        Error::invalid(format!("csv: {e}"))
    }
}
