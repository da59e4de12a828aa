//! Per-dimension discriminability of encodings.
//!
//! Every column of an encoding matrix is quantised into four quartile bins
//! and scored by its plug-in mutual information with the class labels, in
//! bits. The distribution of those scores over dimensions summarises how much
//! label information an encoder spreads into each coordinate.

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// MI per encoding dimension and its quantile curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MiReport {
    pub per_dimension_mi: Vec<f64>,
    /// `(q, MI quantile)` for q = 0.01, 0.02, …, 1.00.
    pub quantile_curve: Vec<(f64, f64)>,
}

impl MiReport {
    /// Number of dimensions whose MI exceeds `threshold` bits.
    pub fn high_mi_count(&self, threshold: f64) -> usize {
        self.per_dimension_mi.iter().filter(|&&v| v > threshold).count()
    }

    pub fn median(&self) -> f64 {
        quantile(&sorted(&self.per_dimension_mi), 0.5)
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Linearly interpolated quantile of already sorted, non-empty data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Midpoint-interpolated percentile of sorted data.
fn midpoint_percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    0.5 * (sorted[pos.floor() as usize] + sorted[pos.ceil() as usize])
}

/// Quartile binning into `0..=3`. Values equal to an edge go to the lower bin.
pub fn quantize_2bit(column: &[f64]) -> Vec<u8> {
    if column.is_empty() {
        return Vec::new();
    }
    let s = sorted(column);
    let edges = [0.25, 0.5, 0.75].map(|p| midpoint_percentile(&s, p));
    column.iter().map(|&v| edges.iter().filter(|&&e| e < v).count() as u8).collect()
}

/// Plug-in mutual information `Σ p(b,c) log2(p(b,c) / (p(b) p(c)))`, in bits.
pub fn mutual_information(quantized: &[u8], labels: &[i64]) -> Result<f64> {
    if quantized.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} quantised values for {} labels",
            quantized.len(),
            labels.len()
        )));
    }
    if quantized.is_empty() {
        return Err(Error::invalid("mutual information needs at least one sample"));
    }
    let n = quantized.len() as f64;
    let mut joint: BTreeMap<(u8, i64), usize> = BTreeMap::new();
    let mut bins: BTreeMap<u8, usize> = BTreeMap::new();
    let mut classes: BTreeMap<i64, usize> = BTreeMap::new();
    for (&b, &c) in quantized.iter().zip(labels) {
        *joint.entry((b, c)).or_default() += 1;
        *bins.entry(b).or_default() += 1;
        *classes.entry(c).or_default() += 1;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(b, c), &count)| {
            let pbc = count as f64 / n;
            let pb = bins[&b] as f64 / n;
            let pc = classes[&c] as f64 / n;
            pbc * (pbc / (pb * pc)).log2()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// Quantises every column of `encodings` (N × D) and scores it against `labels`.
pub fn mi_report(encodings: ArrayView2<'_, f64>, labels: &[i64]) -> Result<MiReport> {
    let n = encodings.nrows();
    if labels.len() != n {
        return Err(Error::invalid(format!("{n} encodings for {} labels", labels.len())));
    }
    if n < 2 {
        return Err(Error::invalid("MI report needs at least two encodings"));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::invalid("MI report needs at least two distinct labels"));
    }
    if encodings.ncols() == 0 {
        return Err(Error::invalid("encodings have no dimensions"));
    }
    let per_dimension_mi: Vec<f64> = (0..encodings.ncols())
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = encodings.column(j).to_vec();
            mutual_information(&quantize_2bit(&column), labels)
        })
        .collect::<Result<_>>()?;
    let s = sorted(&per_dimension_mi);
    let quantile_curve = (1..=100)
        .map(|i| {
            let q = f64::from(i) / 100.0;
            (q, quantile(&s, q))
        })
        .collect();
    Ok(MiReport { per_dimension_mi, quantile_curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quartiles_of_four_values() {
        assert_eq!(quantize_2bit(&[1.0, 2.0, 3.0, 4.0]), vec![0, 1, 2, 3]);
        assert_eq!(quantize_2bit(&[4.0, 1.0, 3.0, 2.0]), vec![3, 0, 2, 1]);
        assert_eq!(quantize_2bit(&[7.0; 9]), vec![0; 9]);
        assert!(quantize_2bit(&[]).is_empty());
    }

    /// Sort, read the three midpoint percentiles off by hand, threshold.
    fn naive_quantize(column: &[f64]) -> Vec<u8> {
        let mut s = column.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = s.len();
        let edge = |num: usize| {
            // p·(n−1) with p = num/4, kept exact in integers.
            let lo = num * (n - 1) / 4;
            let hi = (num * (n - 1)).div_ceil(4);
            (s[lo] + s[hi]) / 2.0
        };
        let (e1, e2, e3) = (edge(1), edge(2), edge(3));
        column
            .iter()
            .map(|&v| {
                if v <= e1 {
                    0
                } else if v <= e2 {
                    1
                } else if v <= e3 {
                    2
                } else {
                    3
                }
            })
            .collect()
    }

    #[test]
    fn quantize_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let n = rng.random_range(1..60);
            let column: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(-5i32..5)) * 0.5).collect();
            assert_eq!(quantize_2bit(&column), naive_quantize(&column));
        }
    }

    #[test]
    fn mi_examples() {
        let labels = [0, 1, 0, 1, 1, 0];
        let q: Vec<u8> = labels.iter().map(|&l| l as u8).collect();
        assert!((mutual_information(&q, &labels).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(mutual_information(&[2; 6], &labels).unwrap(), 0.0);
        let four = [0i64, 1, 2, 3, 3, 2, 1, 0];
        let q4: Vec<u8> = four.iter().map(|&l| l as u8).collect();
        assert!((mutual_information(&q4, &four).unwrap() - 2.0).abs() < 1e-12);
        assert!(mutual_information(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn report_of_label_and_constant_columns() {
        let labels = vec![0, 0, 1, 1, 0, 1, 0, 1];
        let enc = Array2::from_shape_fn((8, 2), |(i, j)| if j == 0 { labels[i] as f64 } else { 3.0 });
        let r = mi_report(enc.view(), &labels).unwrap();
        assert!((r.per_dimension_mi[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.per_dimension_mi[1], 0.0);
        assert!((r.median() - 0.5).abs() < 1e-12);
        assert_eq!(r.quantile_curve.len(), 100);
        assert_eq!(r.high_mi_count(0.5), 1);
        assert!(r.quantile_curve.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(mi_report(enc.view(), &[1; 8]).is_err());
        assert!(mi_report(array![[1.0]].view(), &[0]).is_err());
    }

    #[test]
    fn shuffled_labels_carry_little_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 2400;
        let mut labels: Vec<i64> = (0..n).map(|i| (i % 3) as i64).collect();
        let enc =
            Array2::from_shape_fn((n, 16), |(i, j)| labels[i] as f64 * (j as f64) + rng.random::<f64>());
        labels.shuffle(&mut rng);
        let r = mi_report(enc.view(), &labels).unwrap();
        assert!(r.per_dimension_mi.iter().all(|&v| v < 0.05), "{:?}", r.per_dimension_mi);
    }

    proptest! {
        #[test]
        fn mi_is_monotone_invariant_and_bounded(
            column in proptest::collection::vec(-50.0f64..50.0, 4..80),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<i64> = column.iter().map(|_| rng.random_range(0..5)).collect();
            let base = mutual_information(&quantize_2bit(&column), &labels).unwrap();
            let warped: Vec<f64> = column.iter().map(|v| (v / 10.0).exp() * 3.0 - 1.0).collect();
            let after = mutual_information(&quantize_2bit(&warped), &labels).unwrap();
            prop_assert!((base - after).abs() < 1e-12);
            prop_assert!(base >= 0.0);
            prop_assert!(base <= 2.0 + 1e-12);
        }
    }
}
