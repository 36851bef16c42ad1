//! Execution strategy for the data-parallel loops (curve sweeps, Monte-Carlo
//! trials, per-message enumeration).
//!
//! With the `parallel` feature the loops run on the rayon global pool. Without
//! it, [`Exec::Parallel`] silently degrades to sequential execution, so callers
//! never need to gate on the feature themselves. Every helper returns results
//! in input order, and reductions are only used with associative, commutative
//! merges over integers, so output never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Maps `f` over `items`, preserving order.
    pub(crate) fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Folds `0..len` into per-worker accumulators and merges them.
    ///
    /// `merge` must be associative and commutative for the result to be
    /// independent of the split.
    pub(crate) fn fold_range<A, I, F, M>(self, len: u64, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(A, u64) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..len)
                .into_par_iter()
                .fold(&init, &fold)
                .reduce(&init, &merge),
            _ => (0..len).fold(init(), fold),
        }
    }
}
