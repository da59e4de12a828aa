//! Distances between scalar Gaussians.
//!
//! The directional total variation distance (DTVD) between `p_X = N(μ_X, σ_X²)`
//! and `p_Y = N(μ_Y, σ_Y²)` is estimated by classifying the two distributions
//! with the closed-form one-dimensional minimax probability machine (MPM):
//! the boundary sits at
//!
//! ```text
//! T = (μ_X σ_Y + μ_Y σ_X) / (σ_X + σ_Y)
//! ```
//!
//! and twice the probability mass classified correctly at `T`, minus one,
//! gives
//!
//! ```text
//! d_DTV = 4 Φ((μ_Y − μ_X) / (σ_X + σ_Y)) − 2 = 2 erf((μ_Y − μ_X) / (√2 (σ_X + σ_Y)))
//! ```
//!
//! which carries the sign of `μ_Y − μ_X`. [`tvd_numeric`] integrates the
//! true (unsigned) total variation distance by adaptive quadrature and is
//! used as an independent check.
//!
//! ```rust
//! use d3_encoding::distdist::{dtvd_closed_form, mpm_closed_form, Gaussian1D};
//!
//! let x = Gaussian1D::new(0.0, 1.0);
//! let y = Gaussian1D::new(3.0, 2.0);
//! let mpm = mpm_closed_form(x, y).unwrap();
//! assert!((mpm.threshold - 1.0).abs() < 1e-12);
//! assert!(dtvd_closed_form(x, y).unwrap() > 0.0);
//! assert!(dtvd_closed_form(y, x).unwrap() < 0.0);
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Error function, accurate to about one ulp.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function `1 − erf(x)`, accurate in the far tail.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// A univariate normal distribution `N(mu, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    pub mu: f64,
    pub sigma: f64,
}

impl Gaussian1D {
    pub const fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::invalid(format!("{name}: mean must be finite, got {}", self.mu)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid(format!(
                "{name}: standard deviation must be positive and finite, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Probability density at `u`.
    pub fn pdf(&self, u: f64) -> f64 {
        let z = (u - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }
}

/// Closed-form scalar MPM boundary `a★ x − b★ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpmSolution {
    pub a_star: f64,
    pub b_star: f64,
    pub kappa_star: f64,
    /// Decision threshold `T = b★ / a★`.
    pub threshold: f64,
}

/// Standard normal CDF `Φ(x) = (1 + erf(x/√2)) / 2`.
///
/// Evaluated as `erfc(−x/√2) / 2`, the same identity rearranged so that the
/// lower tail keeps full relative precision.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("std_normal_cdf: non-finite input {x}")));
    }
    Ok(phi(x))
}

#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Signed distance `2 erf((μ_Y − μ_X) / (√2 (σ_X + σ_Y)))`, in `(−2, 2)`.
pub fn dtvd_closed_form(px: Gaussian1D, py: Gaussian1D) -> Result<f64> {
    px.validate("p_X")?;
    py.validate("p_Y")?;
    Ok(2.0 * erf((py.mu - px.mu) / (std::f64::consts::SQRT_2 * (px.sigma + py.sigma))))
}

/// The same distance through the normal CDF, `4 Φ((μ_Y − μ_X)/(σ_X + σ_Y)) − 2`.
pub fn dtvd_phi_form(px: Gaussian1D, py: Gaussian1D) -> Result<f64> {
    px.validate("p_X")?;
    py.validate("p_Y")?;
    Ok(4.0 * phi((py.mu - px.mu) / (px.sigma + py.sigma)) - 2.0)
}

/// Closed-form minimax probability machine for two scalar Gaussians.
///
/// Fails with [`Error::DegenerateBoundary`] when the means coincide, since
/// `a★ = 1/(μ_X − μ_Y)` is undefined there.
pub fn mpm_closed_form(px: Gaussian1D, py: Gaussian1D) -> Result<MpmSolution> {
    px.validate("p_X")?;
    py.validate("p_Y")?;
    let diff = px.mu - py.mu;
    if diff == 0.0 {
        return Err(Error::DegenerateBoundary { mu: px.mu });
    }
    let sum = px.sigma + py.sigma;
    let a_star = 1.0 / diff;
    let threshold = (px.mu * py.sigma + py.mu * px.sigma) / sum;
    let threshold = threshold.clamp(px.mu.min(py.mu), px.mu.max(py.mu));
    Ok(MpmSolution { a_star, b_star: a_star * threshold, kappa_star: diff.abs() / sum, threshold })
}

/// `Area = 1 − Φ((T − μ_X)/σ_X) + Φ((T − μ_Y)/σ_Y)`.
///
/// For `μ_X < μ_Y` this is the total mass misclassified by the threshold
/// (the right tail of `p_X` plus the left tail of `p_Y`). The formula is kept
/// literally for `μ_X ≥ μ_Y` as well, where it equals two minus the
/// misclassified mass, so that `2 − 2·Area` reproduces the signed
/// [`dtvd_closed_form`] at the MPM threshold in either ordering.
pub fn misclassification_area(px: Gaussian1D, py: Gaussian1D, threshold: f64) -> Result<f64> {
    px.validate("p_X")?;
    py.validate("p_Y")?;
    if !threshold.is_finite() {
        return Err(Error::invalid(format!("threshold must be finite, got {threshold}")));
    }
    let upper_x = 0.5 * erfc((threshold - px.mu) / px.sigma * FRAC_1_SQRT_2);
    Ok(upper_x + phi((threshold - py.mu) / py.sigma))
}

/// Absolute tolerance targeted by [`tvd_numeric`] on the integral of `|p_X − p_Y|`.
pub const TVD_QUADRATURE_TOL: f64 = 1e-12;
const MAX_SUBINTERVALS: usize = 4000;

/// Unsigned total variation distance `½ ∫ |p_X(u) − p_Y(u)| du` by adaptive
/// Gauss-Kronrod quadrature over `[min μ − 10 max σ, max μ + 10 max σ]`.
pub fn tvd_numeric(px: Gaussian1D, py: Gaussian1D) -> Result<f64> {
    px.validate("p_X")?;
    py.validate("p_Y")?;
    let spread = px.sigma.max(py.sigma);
    let lo = px.mu.min(py.mu) - 10.0 * spread;
    let hi = px.mu.max(py.mu) + 10.0 * spread;

    // Breakpoints at the density crossings and on a σ-grid around each mean so
    // that narrow peaks and kinks of |p_X − p_Y| land on panel edges.
    let mut breaks = vec![lo, hi];
    for g in [px, py] {
        for j in -10..=10 {
            breaks.push(g.mu + f64::from(j) * g.sigma);
        }
    }
    breaks.extend(density_crossings(px, py));
    breaks.retain(|b| b.is_finite() && *b >= lo && *b <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let integrand = |u: f64| (px.pdf(u) - py.pdf(u)).abs();
    let (value, estimate) =
        integrate_adaptive(&integrand, &breaks, TVD_QUADRATURE_TOL).map_err(|estimate| {
            Error::NumericFailure { reason: "total variation quadrature did not converge".into(), estimate }
        })?;
    debug_assert!(estimate <= TVD_QUADRATURE_TOL);
    Ok((0.5 * value).clamp(0.0, 1.0))
}

/// Real solutions of `p_X(u) = p_Y(u)`.
fn density_crossings(px: Gaussian1D, py: Gaussian1D) -> Vec<f64> {
    let (vx, vy) = (px.sigma * px.sigma, py.sigma * py.sigma);
    let a = 0.5 / vy - 0.5 / vx;
    let b = px.mu / vx - py.mu / vy;
    let c = 0.5 * py.mu * py.mu / vy - 0.5 * px.mu * px.mu / vx + (py.sigma / px.sigma).ln();
    if a.abs() < 1e-300 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// 15-point Kronrod estimate and |K15 − G7| error estimate on `[a, b]`.
fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive quadrature over consecutive panels `breaks[i]..breaks[i+1]`.
///
/// Returns `(integral, error estimate)` or the best error estimate reached
/// when the subinterval budget runs out.
pub(crate) fn integrate_adaptive(
    f: &impl Fn(f64) -> f64,
    breaks: &[f64],
    tol: f64,
) -> std::result::Result<(f64, f64), f64> {
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let mut panels: Vec<Panel> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (value, err) = gauss_kronrod_15(f, w[0], w[1]);
            Panel { a: w[0], b: w[1], value, err }
        })
        .collect();

    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= tol {
            let total: f64 = panels.iter().map(|p| p.value).sum();
            return Ok((total, total_err));
        }
        if panels.len() >= MAX_SUBINTERVALS {
            return Err(total_err);
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            // Panel can no longer be split in floating point.
            return Err(total_err);
        }
        for (lo, hi) in [(a, mid), (mid, b)] {
            let (value, err) = gauss_kronrod_15(f, lo, hi);
            panels.push(Panel { a: lo, b: hi, value, err });
        }
    }
}
