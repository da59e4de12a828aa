use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_training_data, cluster_statistics, nearest, sq_dist, Codebook, SIGMA_FLOOR};
use crate::error::{Error, Result};
use crate::par::ordered_sum;

const MAX_REPAIRS: usize = 10;

/// Diagnostics from a k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansTrace {
    /// Sum of squared distances to the assigned centre after every assignment step.
    pub objective: Vec<f64>,
    /// Lloyd iterations performed (update + reassign).
    pub iterations: usize,
    /// Empty-cluster re-seeds performed.
    pub repairs: usize,
    /// Final hard assignment of every training vector.
    pub assignments: Vec<usize>,
}

/// Lloyd's k-means with k-means++ seeding.
///
/// Converges when no assignment changes or after `max_iters` iterations. The
/// returned centres are the means of the final assignment, and each std is the
/// per-dimension population spread of its cluster, clamped to [`SIGMA_FLOOR`].
pub fn train_kmeans(data: ArrayView2<'_, f64>, k: usize, seed: u64, max_iters: usize) -> Result<Codebook> {
    train_kmeans_traced(data, k, seed, max_iters).map(|(cb, _)| cb)
}

pub fn train_kmeans_traced(
    data: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<(Codebook, KMeansTrace)> {
    check_training_data(data, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seeds(data, k, &mut rng)?;

    let (mut assignments, mut dists) = assign_all(data, centers.view());
    let mut trace = KMeansTrace {
        objective: vec![ordered_sum(&dists)],
        iterations: 0,
        repairs: 0,
        assignments: Vec::new(),
    };

    loop {
        for _ in 0..max_iters {
            let stats = cluster_statistics(data, &assignments, k)?;
            for (c, &count) in stats.counts.iter().enumerate() {
                // An emptied cluster keeps its previous centre until repaired.
                if count > 0 {
                    centers.row_mut(c).assign(&stats.means.row(c));
                }
            }
            let (next, next_dists) = assign_all(data, centers.view());
            let changed = next.iter().zip(&assignments).filter(|(a, b)| a != b).count();
            assignments = next;
            dists = next_dists;
            trace.objective.push(ordered_sum(&dists));
            trace.iterations += 1;
            if changed == 0 {
                break;
            }
        }

        let counts = counts_of(&assignments, k);
        let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        if empty.is_empty() {
            break;
        }
        if trace.repairs == MAX_REPAIRS {
            return Err(Error::TrainingDegenerate(format!(
                "{} empty clusters remain after {MAX_REPAIRS} repairs",
                empty.len()
            )));
        }
        trace.repairs += 1;
        let mut taken = Vec::new();
        for &c in &empty {
            let far = (0..data.nrows())
                .filter(|i| !taken.contains(i))
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .filter(|&i| dists[i] > 0.0)
                .ok_or_else(|| {
                    Error::TrainingDegenerate("no point left to re-seed an empty cluster".into())
                })?;
            taken.push(far);
            centers.row_mut(c).assign(&data.row(far));
        }
        let (next, next_dists) = assign_all(data, centers.view());
        assignments = next;
        dists = next_dists;
        trace.objective.push(ordered_sum(&dists));
    }

    let stats = cluster_statistics(data, &assignments, k)?;
    let stds = stats.stds.mapv(|s| s.max(SIGMA_FLOOR));
    let codebook = Codebook::new(stats.means, stds).map_err(|e| match e {
        Error::Validation(msg) => Error::TrainingDegenerate(msg),
        other => other,
    })?;
    trace.assignments = assignments;
    Ok((codebook, trace))
}

fn counts_of(assignments: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &a in assignments {
        counts[a] += 1;
    }
    counts
}

fn assign_all(data: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>) -> (Vec<usize>, Vec<f64>) {
    (0..data.nrows()).into_par_iter().map(|i| nearest(centers, data.row(i))).unzip()
}

/// k-means++: first centre uniform, then proportional to squared distance
/// from the nearest chosen centre. Zero-weight points are never drawn, so
/// the seeds are distinct.
fn plus_plus_seeds(data: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let n = data.nrows();
    let mut centers = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&data.row(first));
    let mut d2: Vec<f64> = (0..n).into_par_iter().map(|i| sq_dist(data.row(i), data.row(first))).collect();

    for c in 1..k {
        let total = ordered_sum(&d2);
        if total <= 0.0 {
            return Err(Error::InsufficientData(format!("only {c} distinct seeds available for K = {k}")));
        }
        let target = rng.random::<f64>() * total;
        let mut cum = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            cum += w;
            if w > 0.0 {
                pick = Some(i);
                if cum > target {
                    break;
                }
            }
        }
        let pick = pick.expect("positive total implies a positive weight");
        centers.row_mut(c).assign(&data.row(pick));
        let center = centers.row(c);
        d2.par_iter_mut().enumerate().for_each(|(i, w)| *w = w.min(sq_dist(data.row(i), center)));
    }
    Ok(centers)
}
