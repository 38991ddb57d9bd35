//! Replicate-level execution.
//!
//! Replicate `i` always draws from `stream_rng(master_seed, i)` and results
//! are gathered in index order, so the output is identical for every thread
//! count and for the sequential path. With the `parallel` feature disabled
//! only the sequential path exists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Rayon pool; `threads = None` uses the global pool.
    Parallel { threads: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn with_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            t if cfg!(feature = "parallel") => Execution::Parallel { threads: t },
            _ => Execution::Sequential,
        }
    }
}

fn tag_error(index: usize, e: Error) -> Error {
    match e {
        Error::Replicate { .. } => e,
        other => Error::Replicate {
            index,
            source: Box::new(other),
        },
    }
}

pub fn run_replicates_sequential<T, F>(count: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    F: Fn(usize, &mut StreamRng) -> Result<T>,
{
    (0..count)
        .map(|i| f(i, &mut stream_rng(master_seed, i as u64)).map_err(|e| tag_error(i, e)))
        .collect()
}

#[cfg(feature = "parallel")]
pub fn run_replicates_parallel<T, F>(
    count: usize,
    master_seed: u64,
    threads: Option<usize>,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> Result<T> + Sync,
{
    use rayon::prelude::*;

    let run = || -> Vec<Result<T>> {
        (0..count)
            .into_par_iter()
            .map(|i| f(i, &mut stream_rng(master_seed, i as u64)))
            .collect()
    };
    let results = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    // First failure by index, not by completion time.
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| tag_error(i, e)))
        .collect()
}

/// Runs `count` replicates of `f` under `exec`.
pub fn run_replicates<T, F>(exec: Execution, count: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> Result<T> + Sync,
{
    match exec {
        Execution::Sequential => run_replicates_sequential(count, master_seed, f),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => run_replicates_parallel(count, master_seed, threads, f),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => run_replicates_sequential(count, master_seed, f),
    }
}
