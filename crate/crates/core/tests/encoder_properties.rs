mod support;

use d3_encoding::codebook::{Codebook, InstanceSet};
use d3_encoding::distdist::{dtvd_closed_form, misclassification_area, mpm_closed_form, Gaussian1D};
use d3_encoding::encoders::{encode_d3, encode_vlad};
use ndarray::Array2;
use proptest::prelude::*;

fn codebook_and_set(k: usize, d: usize, means: &[f64], stds: &[f64], ys: &[f64]) -> (Codebook, InstanceSet) {
    let cb = Codebook::new(
        Array2::from_shape_vec((k, d), means[..k * d].to_vec()).unwrap(),
        Array2::from_shape_vec((k, d), stds[..k * d].to_vec()).unwrap(),
    )
    .unwrap();
    let n = ys.len() / d;
    let set = InstanceSet::new(Array2::from_shape_vec((n, d), ys[..n * d].to_vec()).unwrap(), None).unwrap();
    (cb, set)
}

fn rows(m: ndarray::ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

proptest! {
    #[test]
    fn vlad_matches_reference(
        k in 1usize..6, d in 1usize..5,
        means in prop::collection::vec(-5.0f64..5.0, 30),
        stds in prop::collection::vec(0.1f64..3.0, 30),
        ys in prop::collection::vec(-5.0f64..5.0, 0..120),
    ) {
        let (cb, set) = codebook_and_set(k, d, &means, &stds, &ys);
        let ours = encode_vlad(&set, &cb).unwrap();
        let reference = support::reference_vlad(&rows(set.vectors()), &rows(cb.means()));
        for (a, b) in ours.values.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn d3_entries_follow_the_mean_shift_sign(
        k in 1usize..5, d in 1usize..4,
        means in prop::collection::vec(-5.0f64..5.0, 20),
        stds in prop::collection::vec(0.1f64..3.0, 20),
        ys in prop::collection::vec(-5.0f64..5.0, 1..80),
    ) {
        let (cb, set) = codebook_and_set(k, d, &means, &stds, &ys);
        let e = encode_d3(&set, &cb).unwrap();
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for y in set.vectors().outer_iter() {
            let i = cb.assign(y.as_slice().unwrap()).unwrap();
            counts[i] += 1;
            for (s, v) in sums[i].iter_mut().zip(y) {
                *s += v;
            }
        }
        for (i, (sum, &count)) in sums.iter().zip(&counts).enumerate() {
            for (j, s) in sum.iter().enumerate() {
                let v = e.values[i * d + j];
                prop_assert!(v.abs() <= 1.0);
                if count == 0 {
                    prop_assert_eq!(v, 0.0);
                } else {
                    let shift = s / count as f64 - cb.means()[[i, j]];
                    if shift.abs() > 1e-9 {
                        prop_assert!(v == 0.0 || v.signum() == shift.signum());
                    }
                }
            }
        }
    }

    #[test]
    fn duplicating_every_vector_keeps_d3_and_vlad_directions(
        k in 1usize..5, d in 1usize..4,
        means in prop::collection::vec(-5.0f64..5.0, 20),
        stds in prop::collection::vec(0.1f64..3.0, 20),
        ys in prop::collection::vec(-5.0f64..5.0, 1..60),
    ) {
        let (cb, set) = codebook_and_set(k, d, &means, &stds, &ys);
        let doubled = ndarray::concatenate(ndarray::Axis(0), &[set.vectors(), set.vectors()]).unwrap();
        let twice = InstanceSet::new(doubled, None).unwrap();
        for (a, b) in [(encode_d3(&set, &cb).unwrap(), encode_d3(&twice, &cb).unwrap()), (encode_vlad(&set, &cb).unwrap(), encode_vlad(&twice, &cb).unwrap())] {
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dtvd_is_antisymmetric_bounded_and_monotone(
        mx in -20.0f64..20.0, my in -20.0f64..20.0, sx in 0.01f64..10.0, sy in 0.01f64..10.0, step in 0.0f64..5.0,
    ) {
        let (px, py) = (Gaussian1D::new(mx, sx), Gaussian1D::new(my, sy));
        let d = dtvd_closed_form(px, py).unwrap();
        prop_assert_eq!(d, -dtvd_closed_form(py, px).unwrap());
        prop_assert!(d.abs() <= 2.0);
        prop_assert!(d == 0.0 || d.signum() == (my - mx).signum());
        if ((my - mx) / (sx + sy)).abs() < 5.0 {
            prop_assert!(d.abs() < 2.0);
        }
        let further = dtvd_closed_form(px, Gaussian1D::new(my + step, sy)).unwrap();
        prop_assert!(further >= d);
    }

    #[test]
    fn area_identity_holds_in_both_orders(
        mx in -20.0f64..20.0, my in -20.0f64..20.0, sx in 0.01f64..10.0, sy in 0.01f64..10.0,
    ) {
        prop_assume!(mx != my);
        for (a, b) in [(Gaussian1D::new(mx, sx), Gaussian1D::new(my, sy)), (Gaussian1D::new(my, sy), Gaussian1D::new(mx, sx))] {
            let t = mpm_closed_form(a, b).unwrap().threshold;
            let area = misclassification_area(a, b, t).unwrap();
            prop_assert!((2.0 - 2.0 * area - dtvd_closed_form(a, b).unwrap()).abs() < 1e-10);
        }
    }
}
