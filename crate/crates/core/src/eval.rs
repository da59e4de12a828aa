//! One-vs-rest ridge classifier for comparing encodings.
//!
//! Per class `c` the model minimises
//! `(1/N) Σ_i (w_cᵀx_i + b_c − t_ic)² + λ ‖w_c‖²` with `t_ic = ±1`; the bias
//! is not regularised. All classes share one Cholesky factorisation of the
//! normal equations.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// C × D.
    pub weights: Array2<f64>,
    pub biases: Vec<f64>,
    /// Class ids in ascending order; row `c` of `weights` scores `classes[c]`.
    pub classes: Vec<i64>,
    pub lambda: f64,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    /// `w_cᵀx + b_c` for every class.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "encoding has {} dimensions, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self
            .weights
            .outer_iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect())
    }
}

/// Index of the largest score; the first one wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn fit_linear_ovr(encodings: ArrayView2<'_, f64>, labels: &[i64], lambda: f64) -> Result<LinearModel> {
    let (n, d) = encodings.dim();
    if labels.len() != n {
        return Err(Error::invalid(format!("{n} encodings for {} labels", labels.len())));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if n < classes.len() {
        return Err(Error::invalid("need at least one encoding per class"));
    }
    if encodings.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("encodings must be finite"));
    }

    // Augmented design [x, 1]; the last coordinate is the bias.
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j < d { encodings[[i, j]] } else { 1.0 });
    let inv_n = 1.0 / n as f64;
    let mut gram = design.tr_mul(&design) * inv_n;
    for j in 0..d {
        gram[(j, j)] += lambda;
    }
    let chol = gram.cholesky().ok_or_else(|| Error::NumericFailure {
        reason: "ridge normal equations are not positive definite".into(),
        estimate: f64::NAN,
    })?;

    let solutions: Vec<DVector<f64>> = classes
        .par_iter()
        .map(|&c| {
            let targets = DVector::from_iterator(n, labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }));
            chol.solve(&(design.tr_mul(&targets) * inv_n))
        })
        .collect();

    let mut weights = Array2::zeros((classes.len(), d));
    let mut biases = Vec::with_capacity(classes.len());
    for (c, sol) in solutions.iter().enumerate() {
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure {
                reason: "ridge solution is not finite".into(),
                estimate: f64::NAN,
            });
        }
        for j in 0..d {
            weights[[c, j]] = sol[j];
        }
        biases.push(sol[d]);
    }
    Ok(LinearModel { weights, biases, classes, lambda })
}

/// Predicted class id; ties go to the smallest id.
pub fn predict(model: &LinearModel, encoding: &[f64]) -> Result<i64> {
    Ok(model.classes[argmax(&model.scores(encoding)?)])
}

/// Fraction of rows whose prediction matches the label.
pub fn accuracy(model: &LinearModel, encodings: ArrayView2<'_, f64>, labels: &[i64]) -> Result<f64> {
    if encodings.nrows() == 0 || labels.len() != encodings.nrows() {
        return Err(Error::invalid(format!("{} encodings for {} labels", encodings.nrows(), labels.len())));
    }
    let mut correct = 0usize;
    for (row, &label) in encodings.outer_iter().zip(labels) {
        let row = row.to_vec();
        if predict(model, &row)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.len() as f64)
}
