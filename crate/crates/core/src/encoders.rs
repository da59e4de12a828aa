//! Fixed-length encodings of instance sets.
//!
//! All encoders share the same skeleton: every instance is related to a
//! dictionary entry, a per-entry statistic block is computed, and the blocks
//! are concatenated and normalised.
//!
//! | encoder | dictionary | per-entry block (length `d`) |
//! |---------|-----------|------------------------------|
//! | [`encode_d3`] | [`Codebook`] | `erf((μ′ − μ_i) / (√2 (σ′ + σ_i)))` over the hard-assigned subset |
//! | [`encode_vlad`] | [`Codebook`] | `Σ (y − μ_i)` over the hard-assigned subset |
//! | [`encode_fv`] | [`GmmModel`] | log-likelihood gradients w.r.t. `μ_k`, `σ_k` (and optionally `w_k`) |
//!
//! D3 and VLAD L2-normalise each block and then the whole vector; FV applies
//! a signed square root followed by a global L2 normalisation.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::codebook::{nearest, Codebook, GmmModel, InstanceSet};
use crate::distdist::erf;
use crate::error::{Error, Result};

/// Encoding methods, as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    D3,
    Vlad,
    Fv,
    Hybrid,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::D3 => "d3",
            Method::Vlad => "vlad",
            Method::Fv => "fv",
            Method::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d3" => Ok(Method::D3),
            "vlad" => Ok(Method::Vlad),
            "fv" => Ok(Method::Fv),
            "hybrid" => Ok(Method::Hybrid),
            other => Err(Error::invalid(format!("unknown encoding method `{other}`"))),
        }
    }
}

/// What a run of values in an [`Encoding`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    D3,
    Vlad,
    FvWeight,
    FvMean,
    FvSigma,
}

/// `count` consecutive blocks of `len` values each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub count: usize,
    pub len: usize,
}

/// A fixed-length representation of one instance set.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub values: Vec<f64>,
    pub layout: Vec<Block>,
    /// All-zero output (empty set, or statistics identical to the dictionary).
    pub degenerate: bool,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        l2(&self.values)
    }

    fn from_raw(mut values: Vec<f64>, layout: Vec<Block>) -> Self {
        debug_assert_eq!(values.len(), layout.iter().map(|b| b.count * b.len).sum::<usize>());
        let degenerate = !normalize(&mut values);
        Self { values, layout, degenerate }
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales `v` to unit length; returns false (leaving `v` untouched) when it is all zero.
fn normalize(v: &mut [f64]) -> bool {
    let n = l2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
        true
    } else {
        false
    }
}

fn check_dim(y: &InstanceSet, expected: usize) -> Result<()> {
    if y.dim() != expected {
        return Err(Error::invalid(format!(
            "instance set has dimension {}, model expects {expected}",
            y.dim()
        )));
    }
    Ok(())
}

/// Hard-assignment groups: member row indices per cluster.
fn group_by_cluster(y: &InstanceSet, codebook: &Codebook) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); codebook.k()];
    for (i, row) in y.vectors().outer_iter().enumerate() {
        groups[nearest(codebook.means(), row).0].push(i);
    }
    groups
}

/// D3 blocks before any normalisation: `erf((μ′ − μ_i) / (√2 (σ′ + σ_i)))` per
/// cluster, zero for clusters that receive no instance.
pub fn d3_raw(y: &InstanceSet, codebook: &Codebook) -> Result<Vec<f64>> {
    check_dim(y, codebook.dim())?;
    let d = codebook.dim();
    let data = y.vectors();
    let mut out = vec![0.0; d * codebook.k()];
    for (i, members) in group_by_cluster(y, codebook).iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let n = members.len() as f64;
        let block = &mut out[i * d..(i + 1) * d];
        for j in 0..d {
            let mean = members.iter().map(|&r| data[[r, j]]).sum::<f64>() / n;
            let var = members.iter().map(|&r| (data[[r, j]] - mean).powi(2)).sum::<f64>() / n;
            let center = codebook.means()[[i, j]];
            let spread = codebook.stds()[[i, j]];
            block[j] = erf((mean - center) / (SQRT_2 * (var.sqrt() + spread)));
        }
    }
    Ok(out)
}

fn intra_normalize(values: &mut [f64], d: usize) {
    for block in values.chunks_exact_mut(d) {
        normalize(block);
    }
}

/// D3 encoding of `y` against a k-means codebook; length `d·K`.
pub fn encode_d3(y: &InstanceSet, codebook: &Codebook) -> Result<Encoding> {
    let mut raw = d3_raw(y, codebook)?;
    intra_normalize(&mut raw, codebook.dim());
    Ok(Encoding::from_raw(raw, vec![Block { kind: BlockKind::D3, count: codebook.k(), len: codebook.dim() }]))
}

/// VLAD: per-cluster residual sums `Σ (y − μ_i)`, then the same intra and
/// global L2 normalisation as D3. Length `d·K`.
pub fn encode_vlad(y: &InstanceSet, codebook: &Codebook) -> Result<Encoding> {
    check_dim(y, codebook.dim())?;
    let d = codebook.dim();
    let data = y.vectors();
    let mut raw = vec![0.0; d * codebook.k()];
    for (i, members) in group_by_cluster(y, codebook).iter().enumerate() {
        let block = &mut raw[i * d..(i + 1) * d];
        for &r in members {
            for j in 0..d {
                block[j] += data[[r, j]] - codebook.means()[[i, j]];
            }
        }
    }
    intra_normalize(&mut raw, d);
    Ok(Encoding::from_raw(raw, vec![Block { kind: BlockKind::Vlad, count: codebook.k(), len: d }]))
}

/// Fisher Vector options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FvOptions {
    /// Prepend the K mixture-weight gradients.
    pub include_weights: bool,
    /// Signed square root before the final L2 normalisation.
    pub power_normalize: bool,
}

impl Default for FvOptions {
    fn default() -> Self {
        Self { include_weights: false, power_normalize: true }
    }
}

/// Unnormalised Fisher Vector components.
#[derive(Debug, Clone, PartialEq)]
pub struct FvGradients {
    /// `(1/√w_k) Σ_i (γ_i(k) − w_k)`.
    pub weights: Vec<f64>,
    /// `(1/√w_k) Σ_i γ_i(k) (y_i − μ_k)/σ_k`, K × d.
    pub means: Array2<f64>,
    /// `(1/√(2w_k)) Σ_i γ_i(k) ((y_i − μ_k)²/σ_k² − 1)`, K × d.
    pub sigmas: Array2<f64>,
}

pub fn fv_gradients(y: &InstanceSet, model: &GmmModel) -> Result<FvGradients> {
    check_dim(y, model.dim())?;
    let (k, d) = (model.k(), model.dim());
    let mut weights = vec![0.0; k];
    let mut means = Array2::zeros((k, d));
    let mut sigmas = Array2::zeros((k, d));
    let mut gamma = vec![0.0; k];
    for row in y.vectors().outer_iter() {
        crate::codebook::gmm_posteriors_into(model, row, &mut gamma)?;
        accumulate_fv(model, row, &gamma, &mut weights, &mut means, &mut sigmas);
    }
    for (c, (g, &w)) in weights.iter_mut().zip(model.weights()).enumerate() {
        *g /= w.sqrt();
        means.row_mut(c).mapv_inplace(|v| v / w.sqrt());
        sigmas.row_mut(c).mapv_inplace(|v| v / (2.0 * w).sqrt());
    }
    Ok(FvGradients { weights, means, sigmas })
}

fn accumulate_fv(
    model: &GmmModel,
    row: ArrayView1<'_, f64>,
    gamma: &[f64],
    weights: &mut [f64],
    means: &mut Array2<f64>,
    sigmas: &mut Array2<f64>,
) {
    for (c, &g) in gamma.iter().enumerate() {
        weights[c] += g - model.weights()[c];
        for j in 0..model.dim() {
            let z = (row[j] - model.means()[[c, j]]) / model.stds()[[c, j]];
            means[[c, j]] += g * z;
            sigmas[[c, j]] += g * (z * z - 1.0);
        }
    }
}

/// Fisher Vector encoding; `2·d·K` values (plus `K` with weights).
pub fn encode_fv(y: &InstanceSet, model: &GmmModel, opts: FvOptions) -> Result<Encoding> {
    let grads = fv_gradients(y, model)?;
    let (k, d) = (model.k(), model.dim());
    let mut values = Vec::with_capacity(2 * k * d + k);
    let mut layout = Vec::with_capacity(3);
    if opts.include_weights {
        values.extend_from_slice(&grads.weights);
        layout.push(Block { kind: BlockKind::FvWeight, count: 1, len: k });
    }
    values.extend(grads.means.iter());
    layout.push(Block { kind: BlockKind::FvMean, count: k, len: d });
    values.extend(grads.sigmas.iter());
    layout.push(Block { kind: BlockKind::FvSigma, count: k, len: d });
    if opts.power_normalize {
        values.iter_mut().for_each(|v| *v = v.signum() * v.abs().sqrt());
    }
    Ok(Encoding::from_raw(values, layout))
}

/// One component of a hybrid encoding.
#[derive(Debug, Clone, Copy)]
pub enum HybridPart<'a> {
    D3(&'a Codebook),
    Vlad(&'a Codebook),
    Fv(&'a GmmModel, FvOptions),
}

impl HybridPart<'_> {
    fn dim(&self) -> usize {
        match self {
            HybridPart::D3(cb) | HybridPart::Vlad(cb) => cb.dim(),
            HybridPart::Fv(m, _) => m.dim(),
        }
    }

    pub fn encode(&self, y: &InstanceSet) -> Result<Encoding> {
        match *self {
            HybridPart::D3(cb) => encode_d3(y, cb),
            HybridPart::Vlad(cb) => encode_vlad(y, cb),
            HybridPart::Fv(m, opts) => encode_fv(y, m, opts),
        }
    }
}

/// Encodes with every part, concatenates in order and L2-normalises the result.
pub fn encode_hybrid(y: &InstanceSet, parts: &[HybridPart<'_>]) -> Result<Encoding> {
    let Some(first) = parts.first() else {
        return Err(Error::invalid("hybrid encoding needs at least one part"));
    };
    if let Some(p) = parts.iter().find(|p| p.dim() != first.dim()) {
        return Err(Error::invalid(format!(
            "hybrid parts disagree on feature dimension ({} vs {})",
            first.dim(),
            p.dim()
        )));
    }
    let mut values = Vec::new();
    let mut layout = Vec::new();
    for part in parts {
        let e = part.encode(y)?;
        values.extend(e.values);
        layout.extend(e.layout);
    }
    Ok(Encoding::from_raw(values, layout))
}

/// Encodes every set in parallel; output order follows input order.
pub fn encode_batch<F>(sets: &[InstanceSet], encode: F) -> Result<Vec<Encoding>>
where
    F: Fn(&InstanceSet) -> Result<Encoding> + Sync + Send,
{
    sets.par_iter().map(encode).collect()
}

/// Component counts giving every encoder the same output length `d·target_K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionPlan {
    pub target_dims: usize,
    pub d3_k: usize,
    pub vlad_k: usize,
    pub fv_k: usize,
    /// D3 codebook size and FV mixture size for the D3+FV hybrid.
    pub hybrid: Vec<(Method, usize)>,
}

impl DimensionPlan {
    /// Output length of the hybrid described by the plan, given feature dimension `d`.
    pub fn hybrid_dims(&self, d: usize) -> usize {
        self.hybrid.iter().map(|&(m, k)| if m == Method::Fv { 2 * d * k } else { d * k }).sum()
    }
}

/// D3/VLAD with `target_K` words, FV with `target_K/2` components, and a
/// hybrid of D3 (`target_K/2`) plus FV (`target_K/4`).
pub fn plan_dimensions(d: usize, target_k: usize) -> Result<DimensionPlan> {
    if d == 0 {
        return Err(Error::invalid("feature dimension must be >= 1"));
    }
    if target_k == 0 || !target_k.is_multiple_of(4) {
        return Err(Error::invalid(format!("target K must be a positive multiple of 4, got {target_k}")));
    }
    Ok(DimensionPlan {
        target_dims: d * target_k,
        d3_k: target_k,
        vlad_k: target_k,
        fv_k: target_k / 2,
        hybrid: vec![(Method::D3, target_k / 2), (Method::Fv, target_k / 4)],
    })
}
