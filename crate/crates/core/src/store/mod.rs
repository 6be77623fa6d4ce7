//! Untrusted storage for an encrypted table.
//!
//! Rows are kept as opaque blobs: one sealed cell per column, the
//! serialized keyblock, and the concatenated key-check tags. The proxy
//! scans keyblocks first and then fetches the selected rows by id.

mod counting;
mod memory;
mod sqlite;

pub use counting::{CountingStore, StoreCounts};
pub use memory::MemoryStore;
pub use sqlite::SqliteStore;

use std::collections::BTreeSet;

use crate::container::{key_checks_from_bytes, key_checks_to_bytes, Record};
use crate::error::{Error, Result};
use crate::hve_amortized::{AmortizedCiphertext, FamilyId};
use crate::table::{SealedCell, WrappedRow};
use crate::{Backend, CurveId};

/// What the proxy needs to know about a stored table without any key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableSchema {
    pub family: FamilyId,
    pub curve: CurveId,
    pub columns: Vec<String>,
}

impl TableSchema {
    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
    }
}

/// A row as the store sees it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredRow {
    pub row_id: u64,
    pub cells: Vec<Vec<u8>>,
    pub keyblock: Vec<u8>,
    pub key_checks: Vec<u8>,
}

impl StoredRow {
    pub fn from_wrapped<E: Backend>(row: &WrappedRow<E>) -> Self {
        StoredRow {
            row_id: row.row_id,
            cells: row.cells.iter().map(SealedCell::to_bytes).collect(),
            keyblock: row.keyblock.to_bytes(),
            key_checks: key_checks_to_bytes(&row.key_checks),
        }
    }

    pub fn to_wrapped<E: Backend>(&self) -> Result<WrappedRow<E>> {
        let row = WrappedRow {
            row_id: self.row_id,
            cells: self
                .cells
                .iter()
                .map(|c| SealedCell::from_bytes(c))
                .collect::<Result<_>>()?,
            keyblock: AmortizedCiphertext::from_bytes(&self.keyblock)?,
            key_checks: key_checks_from_bytes(&self.key_checks)?,
        };
        if row.keyblock.num_blocks() != row.arity() || row.key_checks.len() != row.arity() {
            return Err(Error::Malformed(format!(
                "row {}: inconsistent block counts",
                self.row_id
            )));
        }
        Ok(row)
    }
}

/// One item of a keyblock scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyBlockEntry {
    pub row_id: u64,
    pub keyblock: Vec<u8>,
    pub key_checks: Vec<u8>,
}

pub trait EncryptedStore: Send + Sync {
    /// `None` until the first `put_table`.
    fn schema(&self) -> Result<Option<TableSchema>>;

    /// Stores `rows`; rows already present with identical content are
    /// left alone, a differing row under an existing id is an error and
    /// nothing is written. Returns the number of stored rows.
    fn put_table(&self, schema: &TableSchema, rows: &[StoredRow]) -> Result<u64>;

    /// Visits every stored row's keyblock once, in row id order, without
    /// materializing the table.
    fn scan_keyblocks(&self, visit: &mut dyn FnMut(KeyBlockEntry) -> Result<()>) -> Result<()>;

    /// Rows whose id is in `ids`, in row id order; unknown ids are skipped.
    fn fetch_rows(&self, ids: &BTreeSet<u64>) -> Result<Vec<StoredRow>>;

    fn row_count(&self) -> Result<u64>;
}

impl<S: EncryptedStore + ?Sized> EncryptedStore for &S {
    fn schema(&self) -> Result<Option<TableSchema>> {
        (**self).schema()
    }
    fn put_table(&self, schema: &TableSchema, rows: &[StoredRow]) -> Result<u64> {
        (**self).put_table(schema, rows)
    }
    fn scan_keyblocks(&self, visit: &mut dyn FnMut(KeyBlockEntry) -> Result<()>) -> Result<()> {
        (**self).scan_keyblocks(visit)
    }
    fn fetch_rows(&self, ids: &BTreeSet<u64>) -> Result<Vec<StoredRow>> {
        (**self).fetch_rows(ids)
    }
    fn row_count(&self) -> Result<u64> {
        (**self).row_count()
    }
}

/// Checks an incoming batch against the schema it claims.
pub(crate) fn validate_put(
    existing: Option<&TableSchema>,
    schema: &TableSchema,
    rows: &[StoredRow],
) -> Result<()> {
    if schema.columns.is_empty() {
        return Err(Error::invalid("schema has no columns"));
    }
    if let Some(cur) = existing {
        if cur.family != schema.family {
            return Err(Error::FamilyMismatch(format!(
                "store holds family {}, rows are from family {}",
                cur.family, schema.family
            )));
        }
        if cur.curve != schema.curve {
            return Err(Error::CurveMismatch {
                expected: cur.curve.to_byte(),
                found: schema.curve.to_byte(),
            });
        }
        if cur.columns != schema.columns {
            return Err(Error::invalid("column names differ from the stored table"));
        }
    }
    for r in rows {
        if r.row_id == 0 || r.row_id > i64::MAX as u64 {
            return Err(Error::invalid(format!("row id {} out of range", r.row_id)));
        }
        if r.cells.len() != schema.arity() {
            return Err(Error::LengthMismatch {
                what: "stored row arity",
                expected: schema.arity(),
                got: r.cells.len(),
            });
        }
    }
    Ok(())
}
