//! Sequential or data-parallel execution of index-based maps.
//!
//! Every parallel loop in the crate is written as "map an index to a value, collect in index
//! order, then reduce sequentially", so the floating-point result is identical in both modes.

use serde::{Deserialize, Serialize};

use crate::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Exec {
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Number of worker threads the parallel mode would use.
pub fn worker_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    if threads == Some(0) {
        return crate::error::invalid("thread count must be at least 1");
    }
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::Error::InvalidArgument(format!("thread pool: {e}")))?;
            return Ok(pool.install(f));
        }
    }
    Ok(f())
}
