//! Execution policy for data-parallel loops.
//!
//! Results are always collected in index order, so a reduction folded over
//! the returned `Vec` is bit-identical whichever policy produced it.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Runs on the current rayon pool. Falls back to sequential execution
    /// when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Exec {
    /// `f(0), f(1), …, f(n-1)` in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..n).map(f).collect(),
        }
    }

    pub fn map_slice<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.map_indexed(items.len(), |i| f(&items[i]))
    }
}

/// Runs `f` with `workers` threads. `workers == 1` selects the sequential
/// policy; `workers == 0` uses the global rayon pool.
pub fn with_workers<R, F>(workers: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce(Exec) -> R + Send,
{
    if workers == 1 {
        return Ok(f(Exec::Sequential));
    }
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return Ok(f(Exec::Parallel));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| crate::error::Error::ThreadPool(e.to_string()))?;
        Ok(pool.install(|| f(Exec::Parallel)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(f(Exec::Sequential))
    }
}
