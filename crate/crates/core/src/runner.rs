//! Parallel execution of independent trajectories.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// Runs indexed jobs on a fixed number of worker threads.
///
/// Results always come back in index order, so any fold over them is
/// independent of the worker count.
pub struct Runner {
    pool: ThreadPool,
    workers: usize,
}

impl Runner {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidInput("workers must be at least 1".into()));
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Evaluates `f(i)` for `i` in `start..end`, returned in index order.
    pub fn map_indexed<T, F>(&self, start: u64, end: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        if self.workers == 1 {
            return (start..end).map(f).collect();
        }
        self.pool.install(|| (start..end).into_par_iter().map(f).collect())
    }
}

impl std::fmt::Debug for Runner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Runner").field("workers", &self.workers).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let r = Runner::new(3).unwrap();
        let v = r.map_indexed(5, 1005, |i| i * i);
        assert_eq!(v.len(), 1000);
        assert!(v.iter().enumerate().all(|(k, &x)| x == (k as u64 + 5).pow(2)));
        assert!(Runner::new(0).is_err());
    }
}
