//! Batch drivers for independent work items.
//!
//! Monte-Carlo trials and channel pairs are keyed by an index that fully
//! determines their random substream, so results never depend on who computes
//! what. With the `parallel` feature (default) batches run on the rayon pool;
//! without it, or with [`Exec::Sequential`], they run on the calling thread.
//! Both drivers return results in index order.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Driver selection for batch execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Rayon-parallel when the `parallel` feature is enabled, sequential
    /// otherwise.
    #[default]
    Auto,
    /// Always run on the calling thread.
    Sequential,
}

/// Maps `f` over an index range, returning results in index order.
pub fn run_batch<T, F>(exec: Exec, range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Auto => range.into_par_iter().map(f).collect(),
        _ => range.map(f).collect(),
    }
}
