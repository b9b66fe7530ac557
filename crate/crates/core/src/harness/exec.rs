//! Fixed-size trial blocks executed on a bounded pool with results returned
//! in block order, so every reduction is independent of the worker count.

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Trials per work unit.
pub const BLOCK_SIZE: u64 = 1024;

/// Environment variable consulted when no explicit worker count is given.
pub const WORKERS_ENV: &str = "AIRFL_SIM_WORKERS";

/// Worker count from an explicit value, then [`WORKERS_ENV`], then the
/// machine's available parallelism.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    if let Some(n) = explicit {
        return if n == 0 { Err(invalid("worker count must be positive")) } else { Ok(n) };
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(invalid(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Bounded pool that maps work items in parallel and keeps input order.
#[derive(Debug)]
pub struct Executor {
    pool: rayon::ThreadPool,
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(invalid("worker count must be positive"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| invalid(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f` applied to every item; the output order matches `items`.
    pub fn map<I, T, F>(&self, items: Vec<I>, f: F) -> Result<Vec<T>>
    where
        I: Send,
        T: Send,
        F: Fn(I) -> Result<T> + Sync + Send,
    {
        self.pool.install(|| items.into_par_iter().map(f).collect())
    }

    /// Splits `0..trials` into blocks of [`BLOCK_SIZE`] and evaluates `f`
    /// on each block range; results come back in block order.
    pub fn blocks<T, F>(&self, trials: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(std::ops::Range<u64>) -> Result<T> + Sync + Send,
    {
        let ranges: Vec<_> = (0..trials.div_ceil(BLOCK_SIZE))
            .map(|b| b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(trials))
            .collect();
        self.map(ranges, f)
    }
}
