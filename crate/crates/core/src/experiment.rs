//! Train-encode-classify pipeline over labelled instance sets.
//!
//! [`EncoderBank::train`] fits every dictionary a [`DimensionPlan`] asks for
//! on the pooled training vectors; [`run_method`] then encodes train and test
//! sets, fits the ridge classifier and reports test accuracy.

use ndarray::Array2;

use crate::codebook::{train_gmm_em, train_kmeans, Codebook, GmmModel, InstanceSet};
use crate::encoders::{
    encode_batch, encode_d3, encode_fv, encode_hybrid, encode_vlad, plan_dimensions, DimensionPlan, Encoding,
    FvOptions, HybridPart, Method,
};
use crate::error::{Error, Result};
use crate::eval::{accuracy, fit_linear_ovr, LinearModel};
use crate::io::pool_vectors;

pub const KMEANS_MAX_ITERS: usize = 100;
pub const EM_MAX_ITERS: usize = 100;
pub const EM_TOL: f64 = 1e-6;

/// Dictionaries for every encoder of one plan.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderBank {
    pub plan: DimensionPlan,
    /// Shared by D3 and VLAD, which use the same K.
    pub codebook: Codebook,
    pub gmm: GmmModel,
    pub hybrid_codebook: Codebook,
    pub hybrid_gmm: GmmModel,
    pub fv_options: FvOptions,
}

impl EncoderBank {
    pub fn train(train_sets: &[InstanceSet], target_k: usize, seed: u64) -> Result<Self> {
        let pool = pool_vectors(train_sets)?;
        let plan = plan_dimensions(pool.ncols(), target_k)?;
        let [(Method::D3, hk), (Method::Fv, hg)] = plan.hybrid[..] else {
            return Err(Error::Internal("unexpected hybrid plan".into()));
        };
        Ok(Self {
            codebook: train_kmeans(pool.view(), plan.d3_k, seed, KMEANS_MAX_ITERS)?,
            gmm: train_gmm_em(pool.view(), plan.fv_k, seed, EM_MAX_ITERS, EM_TOL)?,
            hybrid_codebook: train_kmeans(pool.view(), hk, seed, KMEANS_MAX_ITERS)?,
            hybrid_gmm: train_gmm_em(pool.view(), hg, seed, EM_MAX_ITERS, EM_TOL)?,
            fv_options: FvOptions::default(),
            plan,
        })
    }

    pub fn encode(&self, method: Method, y: &InstanceSet) -> Result<Encoding> {
        match method {
            Method::D3 => encode_d3(y, &self.codebook),
            Method::Vlad => encode_vlad(y, &self.codebook),
            Method::Fv => encode_fv(y, &self.gmm, self.fv_options),
            Method::Hybrid => encode_hybrid(
                y,
                &[HybridPart::D3(&self.hybrid_codebook), HybridPart::Fv(&self.hybrid_gmm, self.fv_options)],
            ),
        }
    }

    pub fn encode_all(&self, method: Method, sets: &[InstanceSet]) -> Result<Array2<f64>> {
        stack(&encode_batch(sets, |y| self.encode(method, y))?)
    }
}

/// Rows of a batch of equal-length encodings.
pub fn stack(encodings: &[Encoding]) -> Result<Array2<f64>> {
    let d = encodings.first().map_or(0, Encoding::len);
    if encodings.iter().any(|e| e.len() != d) {
        return Err(Error::Internal("encodings of one batch differ in length".into()));
    }
    let flat: Vec<f64> = encodings.iter().flat_map(|e| e.values.iter().copied()).collect();
    Ok(Array2::from_shape_vec((encodings.len(), d), flat).expect("lengths checked"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: Method,
    pub train_encodings: Array2<f64>,
    pub test_encodings: Array2<f64>,
    pub model: LinearModel,
    pub accuracy: f64,
}

pub fn run_method(
    bank: &EncoderBank,
    method: Method,
    train: (&[InstanceSet], &[i64]),
    test: (&[InstanceSet], &[i64]),
    lambda: f64,
) -> Result<MethodRun> {
    let train_encodings = bank.encode_all(method, train.0)?;
    let test_encodings = bank.encode_all(method, test.0)?;
    let model = fit_linear_ovr(train_encodings.view(), train.1, lambda)?;
    let accuracy = accuracy(&model, test_encodings.view(), test.1)?;
    Ok(MethodRun { method, train_encodings, test_encodings, model, accuracy })
}
