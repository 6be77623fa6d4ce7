use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use super::{EncryptedStore, KeyBlockEntry, StoredRow, TableSchema};
use crate::error::Result;

/// Per-operation call counts observed by a [`CountingStore`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StoreCounts {
    pub scans: u64,
    pub scanned_rows: u64,
    pub fetches: u64,
    pub fetched_ids: u64,
    pub fetched_rows: u64,
}

/// Wraps a store and records how it is accessed.
#[derive(Debug)]
pub struct CountingStore<S> {
    inner: S,
    scans: AtomicU64,
    scanned_rows: AtomicU64,
    fetches: AtomicU64,
    fetched_ids: AtomicU64,
    fetched_rows: AtomicU64,
}

impl<S> CountingStore<S> {
    pub fn new(inner: S) -> Self {
        CountingStore {
            inner,
            scans: AtomicU64::new(0),
            scanned_rows: AtomicU64::new(0),
            fetches: AtomicU64::new(0),
            fetched_ids: AtomicU64::new(0),
            fetched_rows: AtomicU64::new(0),
        }
    }

    pub fn counts(&self) -> StoreCounts {
        StoreCounts {
            scans: self.scans.load(Ordering::Relaxed),
            scanned_rows: self.scanned_rows.load(Ordering::Relaxed),
            fetches: self.fetches.load(Ordering::Relaxed),
            fetched_ids: self.fetched_ids.load(Ordering::Relaxed),
            fetched_rows: self.fetched_rows.load(Ordering::Relaxed),
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: EncryptedStore> EncryptedStore for CountingStore<S> {
    fn schema(&self) -> Result<Option<TableSchema>> {
        self.inner.schema()
    }

    fn put_table(&self, schema: &TableSchema, rows: &[StoredRow]) -> Result<u64> {
        self.inner.put_table(schema, rows)
    }

    fn scan_keyblocks(&self, visit: &mut dyn FnMut(KeyBlockEntry) -> Result<()>) -> Result<()> {
        self.scans.fetch_add(1, Ordering::Relaxed);
        self.inner.scan_keyblocks(&mut |e| {
            self.scanned_rows.fetch_add(1, Ordering::Relaxed);
            visit(e)
        })
    }

    fn fetch_rows(&self, ids: &BTreeSet<u64>) -> Result<Vec<StoredRow>> {
        self.fetches.fetch_add(1, Ordering::Relaxed);
        self.fetched_ids
            .fetch_add(ids.len() as u64, Ordering::Relaxed);
        let rows = self.inner.fetch_rows(ids)?;
        self.fetched_rows
            .fetch_add(rows.len() as u64, Ordering::Relaxed);
        Ok(rows)
    }

    fn row_count(&self) -> Result<u64> {
        self.inner.row_count()
    }
}
