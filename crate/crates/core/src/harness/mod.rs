//! Episodes, experiment grids, statistics and result export.

pub mod engine;
pub mod experiment;
pub mod export;
pub mod stats;

pub use engine::{controller_for, run_episode, Episode, EpisodeMetrics, FrameReport, Simulation};
pub use experiment::{run_experiment, CellResult, CellSpec, ExperimentConfig, PairTest, ResultTable};
pub use export::{export_results, read_json, summary, write_csv, write_json, CSV_HEADER};
pub use stats::{mann_whitney_u, mean, sd};

use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "RDW_ARENA_THREADS";

/// Worker count: the machine's parallelism, capped by `RDW_ARENA_THREADS`.
pub fn worker_count() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(cap) if cap > 0 => cap.min(available),
        _ => available,
    }
}

/// Runs `f` on a pool sized by [`worker_count`].
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
