//! Index-ordered parallel map over independent work items.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use twistwalk_core::Result;

use crate::CliError;

/// A dedicated thread pool. Results never depend on the number of threads:
/// item `i` only sees its own random stream and results come back in index
/// order.
pub struct Runner {
    pool: ThreadPool,
}

impl Runner {
    /// `threads = 0` lets rayon pick.
    pub fn new(threads: usize) -> Result<Self, CliError> {
        Ok(Self { pool: ThreadPoolBuilder::new().num_threads(threads).build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f(0), ..., f(count - 1)`; on failure, the error of the lowest index.
    pub fn map<T, F>(&self, count: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        let out: Vec<Result<T>> = self.pool.install(|| (0..count).into_par_iter().map(&f).collect());
        out.into_iter().collect()
    }

    /// Infallible variant of [`map`](Self::map).
    pub fn map_ok<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        self.pool.install(|| (0..count).into_par_iter().map(&f).collect())
    }
}
