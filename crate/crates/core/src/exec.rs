//! Data-parallel helpers.
//!
//! Every hot loop in the crate (kernel rows, Fourier tables, snapshot
//! evaluation) goes through these two functions. With the `parallel`
//! feature they dispatch to rayon; without it, or when a caller asks for
//! [`Execution::Sequential`], they run as plain iterators. Both paths compute
//! every element with the same closure, so results are bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Evaluates `f(i)` for `i in 0..n` and collects the results in order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Calls `f(row_index, row)` on each `row_len`-sized chunk of `data`.
pub fn for_each_row<T, F>(exec: Execution, data: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(row_len > 0 && data.len() % row_len == 0);
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => data
            .par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row)),
        _ => data
            .chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row)),
    }
}
