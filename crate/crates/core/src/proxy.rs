//! Query execution over an encrypted store.
//!
//! 1. scan every row's keyblock;
//! 2. for each row and projected column, decrypt the column's block with
//!    the token key and keep the row if the derived key checks out;
//! 3. fetch the selected rows in one batched lookup;
//! 4. AEAD-open the projected cells;
//! 5. return the plaintext rows.
//!
//! Rows are processed in parallel in bounded chunks, and results are
//! merged in row id order.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;

use crate::container::{key_checks_from_bytes, Record};
use crate::error::{Error, Result};
use crate::hve_amortized::AmortizedCiphertext;
use crate::metrics::Meter;
use crate::store::{EncryptedStore, KeyBlockEntry, StoredRow, TableSchema};
use crate::table::{open_cell, unwrap_cell_key, CellKey, ParametricToken, QueryToken, SealedCell};
use crate::Backend;

/// Rows decrypted per parallel batch during the scan.
const SCAN_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultRow {
    pub row_id: u64,
    /// One value per entry of [`ResultSet::columns`].
    pub values: Vec<Vec<u8>>,
}

/// Something the engine noticed about the stored data but did not treat
/// as fatal. Affected rows are left out of the result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntegrityWarning {
    /// Some but not all projected cell keys were recovered.
    PartialMatch {
        row_id: u64,
        recovered: Vec<usize>,
        missing: Vec<usize>,
    },
    /// The key check passed but the cell did not authenticate.
    CellRejected { row_id: u64, column: usize },
    /// The stored row could not be parsed.
    MalformedRow { row_id: u64, detail: String },
}

impl std::fmt::Display for IntegrityWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntegrityWarning::PartialMatch {
                row_id,
                recovered,
                missing,
            } => write!(
                f,
                "row {row_id}: recovered keys for columns {recovered:?} but not {missing:?}"
            ),
            IntegrityWarning::CellRejected { row_id, column } => {
                write!(f, "row {row_id}: cell {column} failed authentication")
            }
            IntegrityWarning::MalformedRow { row_id, detail } => {
                write!(f, "row {row_id}: {detail}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResultSet {
    /// Projected column names, in table order.
    pub columns: Vec<String>,
    /// Selected rows in row id order.
    pub rows: Vec<ResultRow>,
    pub warnings: Vec<IntegrityWarning>,
}

impl ResultSet {
    pub fn value(&self, row: usize, column: &str) -> Option<&[u8]> {
        let c = self
            .columns
            .iter()
            .position(|n| n.eq_ignore_ascii_case(column))?;
        self.rows.get(row).map(|r| r.values[c].as_slice())
    }

    pub fn row_ids(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.row_id).collect()
    }

    /// CSV with a header row; the first column is the row id.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = std::iter::once("row_id").chain(self.columns.iter().map(String::as_str));
        w.write_record(header).map_err(csv_err)?;
        for r in &self.rows {
            let id = r.row_id.to_string();
            let fields = std::iter::once(id.as_bytes()).chain(r.values.iter().map(Vec::as_slice));
            w.write_record(fields).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One JSON object per row; values that are not UTF-8 are converted
    /// lossily.
    pub fn write_json_lines<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.rows {
            let mut obj = serde_json::Map::new();
            obj.insert("row_id".into(), r.row_id.into());
            for (name, v) in self.columns.iter().zip(&r.values) {
                obj.insert(name.clone(), String::from_utf8_lossy(v).into_owned().into());
            }
            serde_json::to_writer(&mut out, &obj).map_err(|e| Error::Io(e.into()))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Clone, Copy, Debug)]
pub struct ExecOptions {
    /// Decrypt rows on the rayon pool; `false` keeps everything on the
    /// calling thread.
    pub parallel: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { parallel: true }
    }
}

enum Outcome {
    Skip,
    Selected(Vec<CellKey>),
    Warn(IntegrityWarning),
}

/// Checks that a token can be run against a store with `schema`.
pub fn check_compatible<E: Backend>(token: &QueryToken<E>, schema: &TableSchema) -> Result<()> {
    if schema.curve != E::CURVE {
        return Err(Error::CurveMismatch {
            expected: schema.curve.to_byte(),
            found: E::CURVE.to_byte(),
        });
    }
    if schema.family != token.family {
        return Err(Error::FamilyMismatch(format!(
            "token was issued for key family {}, store holds family {}",
            token.family, schema.family
        )));
    }
    if schema.arity() != token.arity {
        return Err(Error::LengthMismatch {
            what: "token arity",
            expected: schema.arity(),
            got: token.arity,
        });
    }
    Ok(())
}

fn stored_schema<S: EncryptedStore + ?Sized>(store: &S) -> Result<TableSchema> {
    store
        .schema()?
        .ok_or_else(|| Error::invalid("the store holds no encrypted table"))
}

pub fn execute_query<E: Backend, S: EncryptedStore + ?Sized>(
    token: &QueryToken<E>,
    store: &S,
) -> Result<ResultSet> {
    execute_query_with(token, store, ExecOptions::default(), &())
}

pub fn execute_parametric<E: Backend, S: EncryptedStore + ?Sized, V: AsRef<[u8]>>(
    token: &ParametricToken<E>,
    values: &[V],
    store: &S,
) -> Result<ResultSet> {
    execute_query(&token.bind(values)?, store)
}

pub fn execute_query_with<E: Backend, S: EncryptedStore + ?Sized, M: Meter + ?Sized>(
    token: &QueryToken<E>,
    store: &S,
    opts: ExecOptions,
    meter: &M,
) -> Result<ResultSet> {
    let schema = stored_schema(store)?;
    check_compatible(token, &schema)?;

    // steps (i) and (ii)
    let mut selected: BTreeMap<u64, Vec<CellKey>> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut pending: Vec<KeyBlockEntry> = Vec::with_capacity(SCAN_CHUNK);
    let drain = |pending: &mut Vec<KeyBlockEntry>,
                 selected: &mut BTreeMap<u64, Vec<CellKey>>,
                 warnings: &mut Vec<IntegrityWarning>| {
        let outcomes: Vec<Outcome> = if opts.parallel {
            pending
                .par_iter()
                .map(|e| select_row(token, e, meter))
                .collect()
        } else {
            pending
                .iter()
                .map(|e| select_row(token, e, meter))
                .collect()
        };
        for (e, o) in pending.drain(..).zip(outcomes) {
            match o {
                Outcome::Skip => {}
                Outcome::Selected(keys) => {
                    selected.insert(e.row_id, keys);
                }
                Outcome::Warn(w) => warnings.push(w),
            }
        }
    };
    store.scan_keyblocks(&mut |entry| {
        pending.push(entry);
        if pending.len() == SCAN_CHUNK {
            drain(&mut pending, &mut selected, &mut warnings);
        }
        Ok(())
    })?;
    drain(&mut pending, &mut selected, &mut warnings);

    // step (iii)
    let ids: BTreeSet<u64> = selected.keys().copied().collect();
    let fetched = store.fetch_rows(&ids)?;

    // steps (iv) and (v)
    let open = |row: &StoredRow| -> Option<std::result::Result<ResultRow, IntegrityWarning>> {
        let keys = selected.get(&row.row_id)?;
        Some(open_row(token, row, keys))
    };
    let opened: Vec<_> = if opts.parallel {
        fetched.par_iter().filter_map(open).collect()
    } else {
        fetched.iter().filter_map(open).collect()
    };
    let mut rows = Vec::with_capacity(opened.len());
    for r in opened {
        match r {
            Ok(row) => rows.push(row),
            Err(w) => warnings.push(w),
        }
    }
    warnings.sort_by_key(warning_row);

    // step (vi)
    Ok(ResultSet {
        columns: token
            .projected
            .iter()
            .map(|&c| schema.columns[c].clone())
            .collect(),
        rows,
        warnings,
    })
}

fn warning_row(w: &IntegrityWarning) -> u64 {
    match w {
        IntegrityWarning::PartialMatch { row_id, .. }
        | IntegrityWarning::CellRejected { row_id, .. }
        | IntegrityWarning::MalformedRow { row_id, .. } => *row_id,
    }
}

/// Recovers the cell keys of one row. A failure on the first projected
/// column ends the row: every key in a token carries the same pattern.
fn select_row<E: Backend, M: Meter + ?Sized>(
    token: &QueryToken<E>,
    entry: &KeyBlockEntry,
    meter: &M,
) -> Outcome {
    let row_id = entry.row_id;
    let malformed =
        |detail: String| Outcome::Warn(IntegrityWarning::MalformedRow { row_id, detail });
    let keyblock = match AmortizedCiphertext::<E>::from_bytes(&entry.keyblock) {
        Ok(k) => k,
        Err(e) => return malformed(format!("keyblock: {e}")),
    };
    let checks = match key_checks_from_bytes(&entry.key_checks) {
        Ok(c) => c,
        Err(e) => return malformed(format!("key checks: {e}")),
    };
    if keyblock.ell() != token.arity
        || keyblock.num_blocks() != token.arity
        || checks.len() != token.arity
    {
        return malformed("keyblock shape does not match the table".into());
    }
    let mut keys = Vec::with_capacity(token.projected.len());
    let mut missing = Vec::new();
    for (i, (&c, key)) in token.projected.iter().zip(&token.keys).enumerate() {
        match unwrap_cell_key(key, row_id, &keyblock, &checks, c, meter) {
            Ok(Some(k)) => keys.push(k),
            Ok(None) if i == 0 => return Outcome::Skip,
            Ok(None) => missing.push(c),
            Err(e) => return malformed(e.to_string()),
        }
    }
    if missing.is_empty() {
        Outcome::Selected(keys)
    } else {
        let recovered = token
            .projected
            .iter()
            .copied()
            .filter(|c| !missing.contains(c))
            .collect();
        Outcome::Warn(IntegrityWarning::PartialMatch {
            row_id,
            recovered,
            missing,
        })
    }
}

fn open_row<E: Backend>(
    token: &QueryToken<E>,
    row: &StoredRow,
    keys: &[CellKey],
) -> std::result::Result<ResultRow, IntegrityWarning> {
    let row_id = row.row_id;
    let mut values = Vec::with_capacity(keys.len());
    for (&c, key) in token.projected.iter().zip(keys) {
        let cell = row
            .cells
            .get(c)
            .ok_or_else(|| IntegrityWarning::MalformedRow {
                row_id,
                detail: format!("missing cell {c}"),
            })
            .and_then(|b| {
                SealedCell::from_bytes(b).map_err(|e| IntegrityWarning::MalformedRow {
                    row_id,
                    detail: e.to_string(),
                })
            })?;
        let v = open_cell(key, row_id, c, &cell)
            .ok_or(IntegrityWarning::CellRejected { row_id, column: c })?;
        values.push(v);
    }
    Ok(ResultRow { row_id, values })
}
