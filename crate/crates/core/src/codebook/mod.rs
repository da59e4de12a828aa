//! Visual dictionaries: k-means codebooks with per-cluster spread, and
//! diagonal-covariance Gaussian mixtures.
//!
//! A [`Codebook`] partitions feature space into `K` hard cells and records
//! the per-dimension mean and population standard deviation of the training
//! vectors in each cell. A [`GmmModel`] is the soft counterpart used by the
//! Fisher Vector encoder.

mod gmm;
mod kmeans;

pub(crate) use gmm::posteriors_into as gmm_posteriors_into;
pub use gmm::{gmm_posteriors, train_gmm_em, train_gmm_em_traced, GmmTrace};
pub use kmeans::{train_kmeans, train_kmeans_traced, KMeansTrace};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::par::chunked_reduce;

/// Lower bound applied to every trained standard deviation, in feature units.
pub const SIGMA_FLOOR: f64 = 1e-4;

/// One entity: an unordered bag of `d`-dimensional instance vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSet {
    vectors: Array2<f64>,
    label: Option<i64>,
}

impl InstanceSet {
    /// Wraps an `n × d` matrix of instance vectors. `n` may be zero.
    pub fn new(vectors: Array2<f64>, label: Option<i64>) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Err(Error::invalid("instance vectors must have dimension >= 1"));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("instance vectors must be finite"));
        }
        Ok(Self { vectors, label })
    }

    pub fn from_rows(rows: &[Vec<f64>], dim: usize, label: Option<i64>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid(format!("all rows must have dimension {dim}")));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let vectors =
            Array2::from_shape_vec((rows.len(), dim), flat).map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(vectors, label)
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn label(&self) -> Option<i64> {
        self.label
    }

    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }
}

/// K cluster centres with per-dimension spread.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    means: Array2<f64>,
    stds: Array2<f64>,
}

impl Codebook {
    /// Validates shapes, finiteness, the σ floor and pairwise-distinct centres.
    pub fn new(means: Array2<f64>, stds: Array2<f64>) -> Result<Self> {
        if means.nrows() == 0 || means.ncols() == 0 {
            return Err(Error::Validation("codebook needs K >= 1 and d >= 1".into()));
        }
        if means.dim() != stds.dim() {
            return Err(Error::Validation(format!(
                "codebook means {:?} and stds {:?} differ in shape",
                means.dim(),
                stds.dim()
            )));
        }
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("codebook means must be finite".into()));
        }
        if let Some(s) = stds.iter().find(|s| !(s.is_finite() && **s >= SIGMA_FLOOR)) {
            return Err(Error::Validation(format!("codebook std {s} is below the floor {SIGMA_FLOOR}")));
        }
        for i in 0..means.nrows() {
            for j in 0..i {
                if means.row(i) == means.row(j) {
                    return Err(Error::Validation(format!("codebook centres {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { means, stds })
    }

    pub fn k(&self) -> usize {
        self.means.nrows()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn means(&self) -> ArrayView2<'_, f64> {
        self.means.view()
    }

    pub fn stds(&self) -> ArrayView2<'_, f64> {
        self.stds.view()
    }

    /// Index of the nearest centre; ties go to the smaller index.
    pub fn assign(&self, y: &[f64]) -> Result<usize> {
        if y.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector has dimension {}, codebook expects {}",
                y.len(),
                self.dim()
            )));
        }
        Ok(nearest(self.means.view(), ArrayView1::from(y)).0)
    }
}

/// Nearest row of `centers` to `y` and its squared distance; first index wins ties.
pub(crate) fn nearest(centers: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.outer_iter().enumerate() {
        let d2 = sq_dist(c, y);
        if d2 < best.1 {
            best = (k, d2);
        }
    }
    best
}

#[inline]
pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// K-component Gaussian mixture with diagonal covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    weights: Array1<f64>,
    means: Array2<f64>,
    stds: Array2<f64>,
}

/// Tolerance on `Σ w_k = 1` accepted when constructing or loading a model.
pub const WEIGHT_SUM_TOL: f64 = 1e-8;

impl GmmModel {
    pub fn new(weights: Array1<f64>, means: Array2<f64>, stds: Array2<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.ncols() == 0 {
            return Err(Error::Validation("GMM needs K >= 1 and d >= 1".into()));
        }
        if means.nrows() != k || stds.dim() != means.dim() {
            return Err(Error::Validation(format!(
                "GMM shapes disagree: {k} weights, means {:?}, stds {:?}",
                means.dim(),
                stds.dim()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Validation("GMM weights must be strictly positive".into()));
        }
        let sum: f64 = weights.sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Validation(format!("GMM weights sum to {sum}, not 1")));
        }
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("GMM means must be finite".into()));
        }
        if let Some(s) = stds.iter().find(|s| !(s.is_finite() && **s >= SIGMA_FLOOR)) {
            return Err(Error::Validation(format!("GMM std {s} is below the floor {SIGMA_FLOOR}")));
        }
        Ok(Self { weights, means, stds })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn means(&self) -> ArrayView2<'_, f64> {
        self.means.view()
    }

    pub fn stds(&self) -> ArrayView2<'_, f64> {
        self.stds.view()
    }

    /// `log w_k + log p_k(y)` for every component.
    pub(crate) fn log_joint(&self, y: ArrayView1<'_, f64>, out: &mut [f64]) {
        const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
        for (k, slot) in out.iter_mut().enumerate() {
            let mut lp = self.weights[k].ln();
            for ((x, m), s) in y.iter().zip(self.means.row(k)).zip(self.stds.row(k)) {
                let z = (x - m) / s;
                lp -= HALF_LN_2PI + s.ln() + 0.5 * z * z;
            }
            *slot = lp;
        }
    }
}

/// Per-cluster statistics over a hard assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub means: Array2<f64>,
    /// Population (divide by `n_k`) standard deviations.
    pub stds: Array2<f64>,
    pub counts: Vec<usize>,
}

/// Per-cluster, per-dimension mean and population standard deviation.
///
/// Empty clusters get mean 0, std 0 and count 0; clamping is left to the
/// caller. Two passes (sum, then squared deviations) in a fixed chunk order.
pub fn cluster_statistics(
    data: ArrayView2<'_, f64>,
    assignments: &[usize],
    k: usize,
) -> Result<ClusterStats> {
    if assignments.len() != data.nrows() {
        return Err(Error::invalid(format!("{} assignments for {} rows", assignments.len(), data.nrows())));
    }
    if let Some(a) = assignments.iter().find(|&&a| a >= k) {
        return Err(Error::invalid(format!("assignment {a} out of range for K = {k}")));
    }
    let d = data.ncols();

    let (sums, counts) = chunked_reduce(
        data.nrows(),
        || (Array2::<f64>::zeros((k, d)), vec![0usize; k]),
        |(s, c), i| {
            let a = assignments[i];
            let mut row = s.row_mut(a);
            row += &data.row(i);
            c[a] += 1;
        },
        |(s, c), (s2, c2)| {
            *s += &s2;
            c.iter_mut().zip(c2).for_each(|(x, y)| *x += y);
        },
    );
    let mut means = sums;
    for (mut row, &c) in means.outer_iter_mut().zip(&counts) {
        if c > 0 {
            row /= c as f64;
        }
    }

    let sq = chunked_reduce(
        data.nrows(),
        || Array2::<f64>::zeros((k, d)),
        |s, i| {
            let a = assignments[i];
            for ((acc, x), m) in s.row_mut(a).iter_mut().zip(data.row(i)).zip(means.row(a)) {
                *acc += (x - m) * (x - m);
            }
        },
        |s, s2| *s += &s2,
    );
    let mut stds = sq;
    for (mut row, &c) in stds.outer_iter_mut().zip(&counts) {
        if c > 0 {
            row.mapv_inplace(|v| (v / c as f64).sqrt());
        }
    }
    Ok(ClusterStats { means, stds, counts })
}

pub(crate) fn distinct_rows(data: ArrayView2<'_, f64>) -> usize {
    let mut keys: Vec<Vec<u64>> =
        data.outer_iter().map(|r| r.iter().map(|v| (v + 0.0).to_bits()).collect()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

pub(crate) fn check_training_data(data: ArrayView2<'_, f64>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if data.ncols() == 0 {
        return Err(Error::invalid("training vectors must have dimension >= 1"));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training vectors must be finite"));
    }
    let distinct = distinct_rows(data);
    if distinct < k {
        return Err(Error::InsufficientData(format!("{distinct} distinct training vectors for K = {k}")));
    }
    Ok(())
}
