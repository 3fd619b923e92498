//! Execution strategies for batches of independent jobs.
//!
//! Sweeps decompose into isolated cells, so they run through one mapping
//! primitive that either stays on the calling thread or fans out across a
//! thread pool. The parallel path needs the `parallel` feature; without it
//! the mode silently degrades to sequential so callers never branch.

/// How a batch of independent jobs is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

/// Applies `job` to every item, returning results in input order.
pub fn map_jobs<T, R, F>(mode: ExecMode, items: Vec<T>, job: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match mode {
        ExecMode::Sequential => items.into_iter().map(job).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                items.into_par_iter().map(job).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.into_iter().map(job).collect()
            }
        }
    }
}
