//! Rayon-backed realization runner.

use idslab_core::RealizationMap;
use rayon::prelude::*;

/// Evaluates realizations on the current rayon pool. Results come back in
/// index order, so reductions downstream are schedule-independent.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl RealizationMap for Parallel {
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..count).into_par_iter().map(f).collect()
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
