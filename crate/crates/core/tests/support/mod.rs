//! Independent reference implementations used as test oracles.
//!
//! These are deliberately naive: plain `Vec`s, no shared helpers with the
//! library, and their own error function.
#![allow(dead_code)]

use std::f64::consts::PI;

/// erf via `2/√π · e^(−x²) · Σ 2ⁿ x^(2n+1) / (1·3·…·(2n+1))`.
/// Every term is positive, so there is no cancellation.
pub fn erf_series(x: f64) -> f64 {
    if x.abs() > 6.0 {
        return x.signum();
    }
    let ax = x.abs();
    let mut term = ax;
    let mut sum = ax;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * ax * ax / (2.0 * n + 1.0);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    x.signum() * 2.0 / PI.sqrt() * (-ax * ax).exp() * sum
}

fn nearest(y: &[f64], means: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, m) in means.iter().enumerate() {
        let d: f64 = y.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn l2_normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// The D3 encoding written out step by step.
pub fn reference_d3(ys: &[Vec<f64>], means: &[Vec<f64>], stds: &[Vec<f64>]) -> Vec<f64> {
    let k = means.len();
    let d = means[0].len();
    let mut assigned: Vec<Vec<&Vec<f64>>> = vec![Vec::new(); k];
    for y in ys {
        assigned[nearest(y, means)].push(y);
    }
    let mut out = Vec::new();
    for i in 0..k {
        let mut f = vec![0.0; d];
        let subset = &assigned[i];
        if !subset.is_empty() {
            let n = subset.len() as f64;
            for j in 0..d {
                let mu: f64 = subset.iter().map(|y| y[j]).sum::<f64>() / n;
                let var: f64 = subset.iter().map(|y| (y[j] - mu) * (y[j] - mu)).sum::<f64>() / n;
                let sigma = var.sqrt();
                f[j] = erf_series((mu - means[i][j]) / (2f64.sqrt() * (sigma + stds[i][j])));
            }
        }
        l2_normalize(&mut f);
        out.extend(f);
    }
    l2_normalize(&mut out);
    out
}

/// VLAD with intra and global L2 normalisation.
pub fn reference_vlad(ys: &[Vec<f64>], means: &[Vec<f64>]) -> Vec<f64> {
    let k = means.len();
    let d = means[0].len();
    let mut v = vec![vec![0.0; d]; k];
    for y in ys {
        let i = nearest(y, means);
        for j in 0..d {
            v[i][j] += y[j] - means[i][j];
        }
    }
    let mut out = Vec::new();
    for mut block in v {
        l2_normalize(&mut block);
        out.extend(block);
    }
    l2_normalize(&mut out);
    out
}

/// `Σ_i log Σ_k w_k N(y_i; μ_k, diag σ_k²)`.
pub fn gmm_log_likelihood(ys: &[Vec<f64>], w: &[f64], means: &[Vec<f64>], stds: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for y in ys {
        let logs: Vec<f64> = (0..w.len())
            .map(|k| {
                let mut l = w[k].ln();
                for j in 0..y.len() {
                    let z = (y[j] - means[k][j]) / stds[k][j];
                    l += -0.5 * z * z - stds[k][j].ln() - 0.5 * (2.0 * PI).ln();
                }
                l
            })
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        total += m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    }
    total
}
