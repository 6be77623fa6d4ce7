use std::collections::{BTreeMap, BTreeSet};
use std::sync::RwLock;

use super::{validate_put, EncryptedStore, KeyBlockEntry, StoredRow, TableSchema};
use crate::error::{Error, Result};

/// In-process store, mainly for tests and benchmarks.
#[derive(Debug, Default)]
pub struct MemoryStore {
    inner: RwLock<Inner>,
}

#[derive(Debug, Default)]
struct Inner {
    schema: Option<TableSchema>,
    rows: BTreeMap<u64, StoredRow>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EncryptedStore for MemoryStore {
    fn schema(&self) -> Result<Option<TableSchema>> {
        Ok(self.inner.read().expect("lock poisoned").schema.clone())
    }

    fn put_table(&self, schema: &TableSchema, rows: &[StoredRow]) -> Result<u64> {
        let mut inner = self.inner.write().expect("lock poisoned");
        validate_put(inner.schema.as_ref(), schema, rows)?;
        let mut staged: BTreeMap<u64, &StoredRow> = BTreeMap::new();
        for r in rows {
            let prior = staged.get(&r.row_id).copied().or(inner.rows.get(&r.row_id));
            match prior {
                Some(p) if p != r => return Err(Error::DuplicateRowId(r.row_id)),
                Some(_) => {}
                None => {
                    staged.insert(r.row_id, r);
                }
            }
        }
        inner.schema.get_or_insert_with(|| schema.clone());
        for (id, r) in staged {
            inner.rows.insert(id, r.clone());
        }
        Ok(inner.rows.len() as u64)
    }

    fn scan_keyblocks(&self, visit: &mut dyn FnMut(KeyBlockEntry) -> Result<()>) -> Result<()> {
        let inner = self.inner.read().expect("lock poisoned");
        for r in inner.rows.values() {
            visit(KeyBlockEntry {
                row_id: r.row_id,
                keyblock: r.keyblock.clone(),
                key_checks: r.key_checks.clone(),
            })?;
        }
        Ok(())
    }

    fn fetch_rows(&self, ids: &BTreeSet<u64>) -> Result<Vec<StoredRow>> {
        let inner = self.inner.read().expect("lock poisoned");
        Ok(ids
            .iter()
            .filter_map(|id| inner.rows.get(id).cloned())
            .collect())
    }

    fn row_count(&self) -> Result<u64> {
        Ok(self.inner.read().expect("lock poisoned").rows.len() as u64)
    }
}
