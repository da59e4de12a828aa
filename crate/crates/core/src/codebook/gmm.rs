use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use super::{check_training_data, train_kmeans_traced, GmmModel, SIGMA_FLOOR};
use crate::error::{Error, Result};
use crate::par::chunked_reduce;

const WEIGHT_FLOOR: f64 = 1e-6;
/// Allowed drop in mean log-likelihood between EM iterations.
const MONOTONE_SLACK: f64 = 1e-8;

/// Mean per-vector log-likelihood after every E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmTrace {
    pub log_likelihood: Vec<f64>,
}

/// Soft assignment `γ(k) = w_k p_k(y) / Σ_j w_j p_j(y)`, evaluated in log space.
pub fn gmm_posteriors(model: &GmmModel, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != model.dim() {
        return Err(Error::invalid(format!("vector has dimension {}, GMM expects {}", y.len(), model.dim())));
    }
    let mut gamma = vec![0.0; model.k()];
    posteriors_into(model, ArrayView1::from(y), &mut gamma)?;
    Ok(gamma)
}

/// Writes posteriors into `out` and returns `log p(y)`.
pub(crate) fn posteriors_into(model: &GmmModel, y: ArrayView1<'_, f64>, out: &mut [f64]) -> Result<f64> {
    model.log_joint(y, out);
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(Error::Internal("all GMM component log-densities are -inf".into()));
    }
    let mut total = 0.0;
    for v in out.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in out.iter_mut() {
        *v /= total;
    }
    Ok(max + total.ln())
}

/// EM for a diagonal-covariance GMM initialised from [`train_kmeans`](super::train_kmeans).
///
/// Stops once the mean log-likelihood per vector improves by less than `tol`
/// or after `max_iters` M-steps. Variances are floored at `SIGMA_FLOOR²` and
/// weights at 1e-6 before renormalising.
pub fn train_gmm_em(
    data: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<GmmModel> {
    train_gmm_em_traced(data, k, seed, max_iters, tol).map(|(m, _)| m)
}

pub fn train_gmm_em_traced(
    data: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<(GmmModel, GmmTrace)> {
    check_training_data(data, k)?;
    let n = data.nrows();
    let (codebook, km) = train_kmeans_traced(data, k, seed, 100)?;
    let mut counts = vec![0.0; k];
    for &a in &km.assignments {
        counts[a] += 1.0;
    }
    let weights = floor_weights(Array1::from_vec(counts) / n as f64);
    let mut model = GmmModel::new(weights, codebook.means().to_owned(), codebook.stds().to_owned())?;

    let mut trace = GmmTrace { log_likelihood: Vec::new() };
    let mut gamma = Array2::<f64>::zeros((n, k));
    for iter in 0..=max_iters {
        let ll = e_step(&model, data, &mut gamma)? / n as f64;
        if let Some(&prev) = trace.log_likelihood.last() {
            if ll < prev - MONOTONE_SLACK {
                return Err(Error::Internal(format!(
                    "EM log-likelihood decreased from {prev} to {ll} at iteration {iter}"
                )));
            }
            trace.log_likelihood.push(ll);
            if ll - prev < tol {
                break;
            }
        } else {
            trace.log_likelihood.push(ll);
        }
        if iter == max_iters {
            break;
        }
        model = m_step(data, gamma.view())?;
    }
    Ok((model, trace))
}

/// Fills `gamma` with posteriors and returns the total log-likelihood.
fn e_step(model: &GmmModel, data: ArrayView2<'_, f64>, gamma: &mut Array2<f64>) -> Result<f64> {
    let k = gamma.ncols();
    let slab = gamma.as_slice_mut().expect("standard layout");
    let lls: Vec<f64> = slab
        .par_chunks_mut(k)
        .enumerate()
        .map(|(i, row)| posteriors_into(model, data.row(i), row))
        .collect::<Result<_>>()?;
    Ok(crate::par::ordered_sum(&lls))
}

fn m_step(data: ArrayView2<'_, f64>, gamma: ArrayView2<'_, f64>) -> Result<GmmModel> {
    let (n, d) = data.dim();
    let k = gamma.ncols();
    let (resp, sums) = chunked_reduce(
        n,
        || (vec![0.0; k], Array2::<f64>::zeros((k, d))),
        |(r, s), i| {
            let x = data.row(i);
            for c in 0..k {
                let g = gamma[[i, c]];
                r[c] += g;
                s.row_mut(c).scaled_add(g, &x);
            }
        },
        |(r, s), (r2, s2)| {
            r.iter_mut().zip(r2).for_each(|(a, b)| *a += b);
            *s += &s2;
        },
    );
    let mut means = sums;
    for (c, mut row) in means.outer_iter_mut().enumerate() {
        if resp[c] > 0.0 {
            row /= resp[c];
        }
    }
    let sq = chunked_reduce(
        n,
        || Array2::<f64>::zeros((k, d)),
        |s, i| {
            let x = data.row(i);
            for c in 0..k {
                let g = gamma[[i, c]];
                for ((acc, xv), m) in s.row_mut(c).iter_mut().zip(x).zip(means.row(c)) {
                    *acc += g * (xv - m) * (xv - m);
                }
            }
        },
        |s, s2| *s += &s2,
    );
    let mut stds = sq;
    for (c, mut row) in stds.outer_iter_mut().enumerate() {
        let r = resp[c];
        row.mapv_inplace(|v| {
            let var = if r > 0.0 { v / r } else { 0.0 };
            var.max(SIGMA_FLOOR * SIGMA_FLOOR).sqrt()
        });
    }
    let weights = floor_weights(Array1::from_vec(resp) / n as f64);
    GmmModel::new(weights, means, stds)
}

fn floor_weights(w: Array1<f64>) -> Array1<f64> {
    let w = w.mapv(|v| v.max(WEIGHT_FLOOR));
    let total = w.sum();
    w / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn posteriors_examples() {
        let one = GmmModel::new(array![1.0], array![[0.0, 0.0]], array![[1.0, 2.0]]).unwrap();
        assert_eq!(gmm_posteriors(&one, &[3.0, -1.0]).unwrap(), vec![1.0]);

        let two = GmmModel::new(array![0.5, 0.5], array![[-1.0], [1.0]], array![[1.0], [1.0]]).unwrap();
        let g = gmm_posteriors(&two, &[0.0]).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
        assert!(gmm_posteriors(&two, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn posteriors_match_direct_densities() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let (k, d) = (rng.random_range(1..5), rng.random_range(1..4));
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let w = Array1::from_iter(raw.iter().map(|v| v / total));
            let m = Array2::from_shape_fn((k, d), |_| rng.random_range(-2.0..2.0));
            let s = Array2::from_shape_fn((k, d), |_| rng.random_range(0.5..2.0));
            let model = GmmModel::new(w.clone(), m.clone(), s.clone()).unwrap();
            let y: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let dens: Vec<f64> = (0..k)
                .map(|c| {
                    w[c] * (0..d)
                        .map(|j| {
                            let z = (y[j] - m[[c, j]]) / s[[c, j]];
                            (-0.5 * z * z).exp() / (s[[c, j]] * (2.0 * std::f64::consts::PI).sqrt())
                        })
                        .product::<f64>()
                })
                .collect();
            let total: f64 = dens.iter().sum();
            let g = gmm_posteriors(&model, &y).unwrap();
            for c in 0..k {
                let want = dens[c] / total;
                assert!((g[c] - want).abs() <= 1e-9 * want.max(1e-300), "{} vs {}", g[c], want);
            }
            assert!((g.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_component_is_grand_statistics() {
        let data = array![[1.0, 5.0], [2.0, 5.0], [6.0, 5.0]];
        let model = train_gmm_em(data.view(), 1, 0, 20, 1e-10).unwrap();
        assert_eq!(model.weights()[0], 1.0);
        assert!((model.means()[[0, 0]] - 3.0).abs() < 1e-12);
        assert!((model.stds()[[0, 0]] - (14.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(model.stds()[[0, 1]], SIGMA_FLOOR);
    }

    fn two_blobs(seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        Array2::from_shape_fn((4000, 2), |(i, _)| {
            (if i % 2 == 0 { -10.0 } else { 10.0 }) + noise.sample(&mut rng)
        })
    }

    #[test]
    fn separated_blobs_are_recovered_and_monotone() {
        let data = two_blobs(3);
        let (model, trace) = train_gmm_em_traced(data.view(), 2, 17, 200, 1e-10).unwrap();
        let mut centres: Vec<f64> = (0..2).map(|c| model.means()[[c, 0]]).collect();
        centres.sort_by(f64::total_cmp);
        assert!((centres[0] + 10.0).abs() < 0.1 && (centres[1] - 10.0).abs() < 0.1, "{centres:?}");
        for c in 0..2 {
            assert!((model.means()[[c, 1]].abs() - 10.0).abs() < 0.1);
            assert!((model.weights()[c] - 0.5).abs() < 0.01);
        }
        assert!((model.weights().sum() - 1.0).abs() <= 1e-10);
        for w in trace.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - MONOTONE_SLACK);
        }
    }

    #[test]
    fn em_is_bitwise_deterministic() {
        let data = two_blobs(4);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| train_gmm_em(data.view(), 3, 1, 50, 1e-9).unwrap())
        };
        let (a, b) = (run(1), run(5));
        let bits = |m: &GmmModel| {
            m.weights()
                .iter()
                .chain(m.means().iter())
                .chain(m.stds().iter())
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}
