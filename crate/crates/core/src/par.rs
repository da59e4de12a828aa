//! Deterministic data-parallel helpers.
//!
//! Work is split into fixed-size index chunks independent of the rayon
//! worker count, each chunk is folded sequentially, and the per-chunk
//! results are merged in chunk order. Floating point sums therefore come out
//! bitwise identical on any number of threads.

use std::ops::Range;

use rayon::prelude::*;

pub(crate) const CHUNK: usize = 2048;

fn chunks(n: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(n)).collect()
}

/// Fold `0..n` chunk-wise in parallel and merge the chunk accumulators in order.
pub(crate) fn chunked_reduce<A, I, F, M>(n: usize, init: I, fold: F, mut merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, usize) + Sync,
    M: FnMut(&mut A, A),
{
    let parts: Vec<A> = chunks(n)
        .into_par_iter()
        .map(|range| {
            let mut acc = init();
            for i in range {
                fold(&mut acc, i);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

/// Ordered sum of `values` in the same chunk layout as [`chunked_reduce`].
pub(crate) fn ordered_sum(values: &[f64]) -> f64 {
    chunked_reduce(values.len(), || 0.0, |acc, i| *acc += values[i], |a, b| *a += b)
}
