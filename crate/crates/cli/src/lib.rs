//! Command implementations behind the `hvedb` binary.
//!
//! Owner commands (`setup`, `encrypt`, `token`, `ptoken`) may read the
//! master secret key. User and proxy commands (`bind`, `query`) only accept
//! public records and refuse secret-key files outright.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hvedb_core::container::{peek_header_file, Record, RecordKind};
use hvedb_core::hve_amortized::{setup_am, AmortizedPublicKey, AmortizedSecretKey};
use hvedb_core::proxy::{execute_query, ResultSet};
use hvedb_core::query::parse_query;
use hvedb_core::store::{EncryptedStore, SqliteStore, StoredRow, TableSchema};
use hvedb_core::table::{
    make_parametric_token, make_token, ParametricToken, PlainTable, QueryToken,
};
use hvedb_core::{with_backend, Backend, CurveId, Error, Result};
use rand::rngs::OsRng;

pub const MPK_FILE: &str = "mpk.hvdb";
pub const MSK_FILE: &str = "msk.hvdb";

const SQLITE_MAGIC: &[u8] = b"SQLite format 3\0";

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Reads a record's header, refusing secret-key records.
fn public_header(path: &Path) -> Result<hvedb_core::container::Header> {
    let header = peek_header_file(path)?;
    if matches!(
        header.kind,
        RecordKind::SecretKey | RecordKind::BasicSecretKey
    ) {
        return Err(invalid(format!(
            "{} is a master secret key; this command only takes public records",
            path.display()
        )));
    }
    Ok(header)
}

fn expect_kind(path: &Path, kind: RecordKind) -> Result<CurveId> {
    let header = peek_header_file(path)?;
    if header.kind != kind {
        return Err(Error::WrongKind {
            expected: kind.name(),
            found: header.kind.name(),
        });
    }
    Ok(header.curve)
}

/// Column names from either a CSV file (its header row) or an existing
/// store.
pub fn read_columns(source: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(source)?;
    if bytes.starts_with(SQLITE_MAGIC) {
        let store = SqliteStore::open_existing(source)?;
        let schema = store
            .schema()?
            .ok_or_else(|| invalid(format!("{} holds no table", source.display())))?;
        return Ok(schema.columns);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let header = rdr
        .headers()
        .map_err(|e| invalid(format!("{}: {e}", source.display())))?;
    Ok(header.iter().map(|h| h.trim().to_string()).collect())
}

fn resolve_columns(names: &[String], columns: &[String]) -> Result<BTreeSet<usize>> {
    if names.len() == 1 && names[0] == "*" {
        return Ok((0..columns.len()).collect());
    }
    names
        .iter()
        .map(|n| {
            columns
                .iter()
                .position(|c| c.eq_ignore_ascii_case(n.trim()))
                .ok_or_else(|| invalid(format!("unknown column `{n}`")))
        })
        .collect()
}

/// Splits a comma-separated list, honouring CSV quoting.
pub fn split_list(list: &str) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(list.as_bytes());
    match rdr.records().next() {
        None => Ok(Vec::new()),
        Some(rec) => Ok(rec
            .map_err(|e| invalid(format!("bad list `{list}`: {e}")))?
            .iter()
            .map(String::from)
            .collect()),
    }
}

/// Writes `mpk.hvdb` and `msk.hvdb` into `out_dir`.
pub fn setup(columns: usize, out_dir: &Path, curve: CurveId) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out_dir)?;
    let (mpk, msk) = (out_dir.join(MPK_FILE), out_dir.join(MSK_FILE));
    with_backend!(curve, E => {
        let keys = setup_am::<E, _>(columns, &mut OsRng)?;
        keys.mpk.write_file(&mpk)?;
        keys.msk.write_file(&msk)?;
    });
    Ok((mpk, msk))
}

/// Encrypts a CSV table into the store at `store_path`, appending after
/// any rows already there. Returns the stored row count.
pub fn encrypt(table_csv: &Path, mpk_path: &Path, store_path: &Path) -> Result<u64> {
    let curve = expect_kind(mpk_path, RecordKind::PublicKey)?;
    let table = PlainTable::from_csv_path(table_csv)?;
    with_backend!(curve, E => encrypt_on::<E>(&table, mpk_path, store_path))
}

fn encrypt_on<E: Backend>(table: &PlainTable, mpk_path: &Path, store_path: &Path) -> Result<u64> {
    let mpk = AmortizedPublicKey::<E>::read_file(mpk_path)?;
    if mpk.ell() != table.arity() {
        return Err(Error::LengthMismatch {
            what: "table columns vs key",
            expected: mpk.ell(),
            got: table.arity(),
        });
    }
    let store = SqliteStore::open(store_path)?;
    let first_id = store.row_count()? + 1;
    let rows: Vec<StoredRow> = table
        .encrypt_from(first_id, &mpk, &mut OsRng)?
        .iter()
        .map(StoredRow::from_wrapped)
        .collect();
    let schema = TableSchema {
        family: mpk.family,
        curve: E::CURVE,
        columns: table.columns().to_vec(),
    };
    store.put_table(&schema, &rows)
}

fn load_msk<E: Backend>(msk_path: &Path, columns: &[String]) -> Result<AmortizedSecretKey<E>> {
    let msk = AmortizedSecretKey::<E>::read_file(msk_path)?;
    if msk.ell() != columns.len() {
        return Err(Error::LengthMismatch {
            what: "schema columns vs key",
            expected: msk.ell(),
            got: columns.len(),
        });
    }
    Ok(msk)
}

/// Issues a token for `query` against the columns found in `schema_src`.
pub fn token(query: &str, msk_path: &Path, schema_src: &Path, out: &Path) -> Result<()> {
    let columns = read_columns(schema_src)?;
    let parsed = parse_query(query, &columns)?;
    let curve = expect_kind(msk_path, RecordKind::SecretKey)?;
    with_backend!(curve, E => {
        let msk = load_msk::<E>(msk_path, &columns)?;
        make_token(parsed.predicate_map(), parsed.projected_columns(), &msk, &mut OsRng)?.write_file(out)
    })
}

/// Issues a parametric token: the predicate columns are fixed now, their
/// values are supplied later with [`bind`].
pub fn ptoken(
    predicate_cols: &[String],
    project: &[String],
    msk_path: &Path,
    schema_src: &Path,
    out: &Path,
) -> Result<()> {
    let columns = read_columns(schema_src)?;
    let preds = resolve_columns(predicate_cols, &columns)?;
    if preds.len() != predicate_cols.len() {
        return Err(invalid("predicate columns must be distinct"));
    }
    let proj = resolve_columns(project, &columns)?;
    let curve = expect_kind(msk_path, RecordKind::SecretKey)?;
    with_backend!(curve, E => {
        let msk = load_msk::<E>(msk_path, &columns)?;
        make_parametric_token(&preds, &proj, &msk, &mut OsRng)?.write_file(out)
    })
}

/// Fills in a parametric token. `values` follow the token's predicate
/// columns in table order.
pub fn bind(ptoken_path: &Path, values: &[String], out: &Path) -> Result<()> {
    let header = public_header(ptoken_path)?;
    if header.kind != RecordKind::ParametricToken {
        return Err(Error::WrongKind {
            expected: RecordKind::ParametricToken.name(),
            found: header.kind.name(),
        });
    }
    with_backend!(header.curve, E => ParametricToken::<E>::read_file(ptoken_path)?.bind(values)?.write_file(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" | "jsonl" => Ok(OutputFormat::JsonLines),
            other => Err(format!(
                "unknown format `{other}` (expected csv or json-lines)"
            )),
        }
    }
}

/// Runs a token against a store.
pub fn run_query(token_path: &Path, store_path: &Path) -> Result<ResultSet> {
    let header = public_header(token_path)?;
    if header.kind != RecordKind::Token {
        return Err(Error::WrongKind {
            expected: RecordKind::Token.name(),
            found: header.kind.name(),
        });
    }
    let store = SqliteStore::open_existing(store_path)?;
    with_backend!(header.curve, E => execute_query(&QueryToken::<E>::read_file(token_path)?, &store))
}

/// [`run_query`] with the result written to `out` and warnings to `warn`.
pub fn query(
    token_path: &Path,
    store_path: &Path,
    format: OutputFormat,
    out: &mut dyn Write,
    warn: &mut dyn Write,
) -> Result<ResultSet> {
    let rs = run_query(token_path, store_path)?;
    match format {
        OutputFormat::Csv => rs.write_csv(&mut *out)?,
        OutputFormat::JsonLines => rs.write_json_lines(&mut *out)?,
    }
    for w in &rs.warnings {
        writeln!(warn, "warning: {w}")?;
    }
    Ok(rs)
}

/// One-line summary of a public record file.
pub fn describe_token(path: &Path) -> Result<String> {
    let header = public_header(path)?;
    let describe = |family: String, arity: usize, preds: &[usize], proj: &[usize]| {
        format!("{} on {} for key family {family}: {arity} columns, predicates on {preds:?}, projecting {proj:?}", header.kind.name(), header.curve)
    };
    with_backend!(header.curve, E => match header.kind {
        RecordKind::Token => {
            let t = QueryToken::<E>::read_file(path)?;
            Ok(describe(t.family.to_string(), t.arity, &t.predicate_columns, &t.projected))
        }
        RecordKind::ParametricToken => {
            let t = ParametricToken::<E>::read_file(path)?;
            Ok(describe(t.family.to_string(), t.arity, &t.predicate_columns, &t.projected))
        }
        other => Ok(format!("{} on {}", other.name(), header.curve)),
    })
}
