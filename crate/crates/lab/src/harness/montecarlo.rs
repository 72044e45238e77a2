//! Replication plumbing. Replications run on the current rayon pool, are
//! collected in index order and reduced sequentially, so every statistic is
//! independent of the thread count.

use rayon::prelude::*;
use serde::Serialize;

use super::stats::{KahanSum, MIN_BATCHES};
use crate::error::Result;

/// Results of `f(0..m)` in index order.
pub fn replicate<T, F>(m: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    (0..m).into_par_iter().map(|i| f(i)).collect()
}

/// Componentwise mean with batch-means standard errors.
#[derive(Clone, Debug, Serialize)]
pub struct VectorEstimate {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub count: usize,
}

/// Mean of the vectors `f(i)`, i < m, in `MIN_BATCHES` contiguous batches
/// (plain sample SE below 2·`MIN_BATCHES` replications). Only one batch of
/// vectors is held in memory at a time.
pub fn replicate_mean<F>(m: usize, dim: usize, f: F) -> Result<VectorEstimate>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let batches = if m >= 2 * MIN_BATCHES { MIN_BATCHES } else { m.max(1) };
    let size = m / batches;
    let mut total = vec![KahanSum::default(); dim];
    let mut batch_means: Vec<Vec<f64>> = Vec::with_capacity(batches);
    for b in 0..batches {
        let start = b * size;
        let end = if b == batches - 1 { m } else { start + size };
        let rows: Vec<Vec<f64>> = (start..end).into_par_iter().map(&f).collect::<Result<_>>()?;
        let mut sums = vec![KahanSum::default(); dim];
        for row in &rows {
            for (i, v) in row.iter().enumerate() {
                sums[i].add(*v);
                total[i].add(*v);
            }
        }
        let len = (end - start).max(1) as f64;
        batch_means.push(sums.iter().map(|s| s.value() / len).collect());
    }
    let mean: Vec<f64> = total.iter().map(|s| s.value() / m.max(1) as f64).collect();
    let se = (0..dim)
        .map(|i| {
            if batches < 2 {
                return 0.0;
            }
            let mut k = KahanSum::default();
            let bm = batch_means.iter().map(|r| r[i]).sum::<f64>() / batches as f64;
            batch_means.iter().for_each(|r| k.add((r[i] - bm).powi(2)));
            (k.value() / (batches - 1) as f64 / batches as f64).sqrt()
        })
        .collect();
    Ok(VectorEstimate { mean, se, count: m })
}
