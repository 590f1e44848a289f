//! Chunked map over instance indices with an order-preserving collect.
//!
//! Chunk boundaries depend only on the chunk size, never on the worker
//! count, and callers reduce the returned per-chunk results left to right.
//! Parallel and sequential execution therefore produce bit-identical sums.

use serde::{Deserialize, Serialize};

/// Instances per work unit.
pub const CHUNK_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, and
    /// falls back to sequential execution otherwise.
    #[default]
    Parallel,
}

pub fn map_chunks<T, F>(items: &[usize], mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[usize]) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            items.par_chunks(CHUNK_SIZE).map(f).collect()
        }
        _ => items.chunks(CHUNK_SIZE).map(f).collect(),
    }
}
