use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Mutex;

use rusqlite::{params, params_from_iter, Connection, OpenFlags, OptionalExtension, Transaction};

use super::{validate_put, EncryptedStore, KeyBlockEntry, StoredRow, TableSchema};
use crate::error::{Error, Result};
use crate::hve_amortized::FamilyId;
use crate::CurveId;

/// Bound on bound parameters per `IN (..)` lookup.
const FETCH_CHUNK: usize = 500;

/// SQLite-backed store: a `meta` key/value table and one `rows` table
/// with columns `(I, cell_1 .. cell_l, keyblock, keycheck)`.
#[derive(Debug)]
pub struct SqliteStore {
    conn: Mutex<Connection>,
}

impl SqliteStore {
    /// Opens or creates the database at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::init(Connection::open(path)?)
    }

    /// Opens an existing database; a missing file is an I/O error.
    pub fn open_existing(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no store at {}", path.display()),
            )));
        }
        Self::init(Connection::open_with_flags(
            path,
            OpenFlags::SQLITE_OPEN_READ_WRITE,
        )?)
    }

    pub fn in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self> {
        conn.execute_batch(
            "CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value BLOB NOT NULL);",
        )?;
        Ok(SqliteStore {
            conn: Mutex::new(conn),
        })
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().expect("store lock poisoned")
    }
}

fn read_schema(conn: &Connection) -> Result<Option<TableSchema>> {
    let get = |key: &str| -> Result<Option<Vec<u8>>> {
        Ok(conn
            .query_row("SELECT value FROM meta WHERE key = ?1", [key], |r| r.get(0))
            .optional()?)
    };
    let (Some(family), Some(curve), Some(columns)) =
        (get("family")?, get("curve")?, get("columns")?)
    else {
        return Ok(None);
    };
    let family = FamilyId(
        family
            .try_into()
            .map_err(|_| Error::Malformed("stored family id has wrong length".into()))?,
    );
    let curve = match curve.as_slice() {
        [b] => CurveId::from_byte(*b),
        _ => None,
    }
    .ok_or_else(|| Error::Malformed("stored curve id invalid".into()))?;
    let columns: Vec<String> = serde_json::from_slice(&columns)
        .map_err(|e| Error::Malformed(format!("stored column list: {e}")))?;
    Ok(Some(TableSchema {
        family,
        curve,
        columns,
    }))
}

fn create_table(tx: &Transaction<'_>, schema: &TableSchema) -> Result<()> {
    let put = |k: &str, v: &[u8]| {
        tx.execute(
            "INSERT INTO meta (key, value) VALUES (?1, ?2)",
            params![k, v],
        )
    };
    put("family", &schema.family.0)?;
    put("curve", &[schema.curve.to_byte()])?;
    put(
        "columns",
        &serde_json::to_vec(&schema.columns).expect("strings serialize"),
    )?;
    let cells: String = (1..=schema.arity())
        .map(|j| format!("cell_{j} BLOB NOT NULL, "))
        .collect();
    tx.execute_batch(&format!(
        "CREATE TABLE rows (I INTEGER PRIMARY KEY, {cells}keyblock BLOB NOT NULL, keycheck BLOB NOT NULL);"
    ))?;
    Ok(())
}

fn select_list(arity: usize) -> String {
    let cells: String = (1..=arity).map(|j| format!("cell_{j}, ")).collect();
    format!("SELECT I, {cells}keyblock, keycheck FROM rows")
}

fn read_row(r: &rusqlite::Row<'_>, arity: usize) -> rusqlite::Result<StoredRow> {
    Ok(StoredRow {
        row_id: r.get::<_, i64>(0)? as u64,
        cells: (1..=arity)
            .map(|j| r.get(j))
            .collect::<rusqlite::Result<_>>()?,
        keyblock: r.get(arity + 1)?,
        key_checks: r.get(arity + 2)?,
    })
}

fn arity_of(conn: &Connection) -> Result<Option<usize>> {
    Ok(read_schema(conn)?.map(|s| s.arity()))
}

impl EncryptedStore for SqliteStore {
    fn schema(&self) -> Result<Option<TableSchema>> {
        read_schema(&self.lock())
    }

    fn put_table(&self, schema: &TableSchema, rows: &[StoredRow]) -> Result<u64> {
        let mut conn = self.lock();
        let tx = conn.transaction()?;
        let existing = read_schema(&tx)?;
        validate_put(existing.as_ref(), schema, rows)?;
        if existing.is_none() {
            create_table(&tx, schema)?;
        }
        let l = schema.arity();
        {
            let mut lookup = tx.prepare(&format!("{} WHERE I = ?1", select_list(l)))?;
            let placeholders: String = (1..=l + 3)
                .map(|i| format!("?{i}"))
                .collect::<Vec<_>>()
                .join(", ");
            let cols: String = (1..=l).map(|j| format!("cell_{j}, ")).collect();
            let mut insert = tx.prepare(&format!(
                "INSERT INTO rows (I, {cols}keyblock, keycheck) VALUES ({placeholders})"
            ))?;
            for r in rows {
                let prior = lookup
                    .query_row([r.row_id as i64], |row| read_row(row, l))
                    .optional()?;
                match prior {
                    Some(p) if &p != r => return Err(Error::DuplicateRowId(r.row_id)),
                    Some(_) => {}
                    None => {
                        let mut vals: Vec<&dyn rusqlite::ToSql> = Vec::with_capacity(l + 3);
                        let id = r.row_id as i64;
                        vals.push(&id);
                        vals.extend(r.cells.iter().map(|c| c as &dyn rusqlite::ToSql));
                        vals.push(&r.keyblock);
                        vals.push(&r.key_checks);
                        insert.execute(vals.as_slice())?;
                    }
                }
            }
        }
        let count: i64 = tx.query_row("SELECT COUNT(*) FROM rows", [], |r| r.get(0))?;
        tx.commit()?;
        Ok(count as u64)
    }

    fn scan_keyblocks(&self, visit: &mut dyn FnMut(KeyBlockEntry) -> Result<()>) -> Result<()> {
        let conn = self.lock();
        if arity_of(&conn)?.is_none() {
            return Ok(());
        }
        let mut stmt = conn.prepare("SELECT I, keyblock, keycheck FROM rows ORDER BY I")?;
        let mut rows = stmt.query([])?;
        while let Some(r) = rows.next()? {
            visit(KeyBlockEntry {
                row_id: r.get::<_, i64>(0)? as u64,
                keyblock: r.get(1)?,
                key_checks: r.get(2)?,
            })?;
        }
        Ok(())
    }

    fn fetch_rows(&self, ids: &BTreeSet<u64>) -> Result<Vec<StoredRow>> {
        let conn = self.lock();
        let Some(l) = arity_of(&conn)? else {
            return Ok(Vec::new());
        };
        let ids: Vec<i64> = ids
            .iter()
            .filter(|&&id| id <= i64::MAX as u64)
            .map(|&id| id as i64)
            .collect();
        let mut out = Vec::new();
        for chunk in ids.chunks(FETCH_CHUNK) {
            let marks = vec!["?"; chunk.len()].join(", ");
            let mut stmt = conn.prepare_cached(&format!(
                "{} WHERE I IN ({marks}) ORDER BY I",
                select_list(l)
            ))?;
            let rows = stmt.query_map(params_from_iter(chunk), |r| read_row(r, l))?;
            for r in rows {
                out.push(r?);
            }
        }
        Ok(out)
    }

    fn row_count(&self) -> Result<u64> {
        let conn = self.lock();
        if arity_of(&conn)?.is_none() {
            return Ok(0);
        }
        let n: i64 = conn.query_row("SELECT COUNT(*) FROM rows", [], |r| r.get(0))?;
        Ok(n as u64)
    }
}
