//! Deterministic parallel map.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::{Error, Result};

/// Runs indexed work items on a fixed number of workers.
///
/// Results always come back in index order, and callers reduce them
/// sequentially, so output is bit-identical for any worker count.
pub struct Executor {
    workers: usize,
    pool: Option<ThreadPool>,
}

impl Executor {
    pub fn serial() -> Self {
        Executor {
            workers: 1,
            pool: None,
        }
    }

    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::domain("worker count must be at least 1"));
        }
        if workers == 1 {
            return Ok(Self::serial());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Workers(e.to_string()))?;
        Ok(Executor {
            workers,
            pool: Some(pool),
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match &self.pool {
            None => (0..count).map(f).collect(),
            Some(pool) => pool.install(|| (0..count).into_par_iter().map(f).collect()),
        }
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::serial()
    }
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("workers", &self.workers)
            .finish()
    }
}
