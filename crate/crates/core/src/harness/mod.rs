//! Experiment orchestration: configuration, full-pipeline runs and reports.
//!
//! The coordinator is single-threaded. Parallel work happens inside the
//! lower modules on the current rayon pool, which [`with_workers`] sizes;
//! every merge is in block order, so outputs do not depend on the pool.

pub mod config;
pub mod report;
pub mod runs;
pub mod table;

pub use config::{AttackSelection, ExperimentConfig, KeygenOptions, LfsrConfig, OutputPaths};
pub use report::{Provenance, Report, Row};
pub use runs::{bits_to_hex, keygen, run_attack, run_keygen, run_transcript, write_transcript, KeygenOutcome};
pub use table::{reproduce_paper, DEFAULT_MASTER_SEED};

use crate::error::{Error, Result};

/// Environment variable consulted for the worker count when no flag or
/// config value is given.
pub const WORKERS_ENV: &str = "Y00_WORKERS";

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    if workers == 0 {
        return Err(Error::config("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ResourceLimit(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Worker count from, in order: the explicit value, [`WORKERS_ENV`], the
/// number of available cores.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    if let Some(w) = explicit {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::config("workers", format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
