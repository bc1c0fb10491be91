//! Execution strategy for independent Monte Carlo realizations.

use alloc::vec::Vec;

/// Maps a function over realization indices `0..count`, returning results in
/// index order. Implementations may evaluate in any order or in parallel, but
/// the returned vector must be ordered by index so downstream reductions are
/// deterministic.
pub trait RealizationMap {
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Plain in-order loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl RealizationMap for Sequential {
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}
