//! Operation counters for complexity accounting.
//!
//! Counted units: base pairings (one per `(G1, G2)` pair fed to a pairing
//! product), target-group exponentiations, and basis linear combinations
//! (one per `(coeffs)_B` vector built).

use std::sync::atomic::{AtomicU64, Ordering};

/// Sink for operation counts. `()` discards everything.
pub trait Meter: Sync {
    fn pairings(&self, n: u64);
    fn gt_exps(&self, n: u64);
    fn lincombs(&self, n: u64);
}

impl Meter for () {
    #[inline]
    fn pairings(&self, _: u64) {}
    #[inline]
    fn gt_exps(&self, _: u64) {}
    #[inline]
    fn lincombs(&self, _: u64) {}
}

#[derive(Debug, Default)]
pub struct OpCounters {
    pairings: AtomicU64,
    gt_exps: AtomicU64,
    lincombs: AtomicU64,
}

/// A point-in-time copy of [`OpCounters`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub pairings: u64,
    pub gt_exps: u64,
    pub lincombs: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            pairings: self.pairings.load(Ordering::Relaxed),
            gt_exps: self.gt_exps.load(Ordering::Relaxed),
            lincombs: self.lincombs.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.pairings.store(0, Ordering::Relaxed);
        self.gt_exps.store(0, Ordering::Relaxed);
        self.lincombs.store(0, Ordering::Relaxed);
    }

    /// Resets, runs `f`, and returns its output with the counts it produced.
    pub fn measure<T>(&self, f: impl FnOnce(&Self) -> T) -> (T, OpCounts) {
        self.reset();
        let out = f(self);
        (out, self.snapshot())
    }
}

impl Meter for OpCounters {
    fn pairings(&self, n: u64) {
        self.pairings.fetch_add(n, Ordering::Relaxed);
    }
    fn gt_exps(&self, n: u64) {
        self.gt_exps.fetch_add(n, Ordering::Relaxed);
    }
    fn lincombs(&self, n: u64) {
        self.lincombs.fetch_add(n, Ordering::Relaxed);
    }
}
