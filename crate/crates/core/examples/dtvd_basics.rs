//! Closed-form distribution distance between two scalar Gaussians, checked
//! against the MPM boundary and a numerically integrated total variation.

use d3_encoding::distdist::{
    dtvd_closed_form, misclassification_area, mpm_closed_form, tvd_numeric, Gaussian1D,
};

fn main() -> anyhow::Result<()> {
    let pairs = [
        (Gaussian1D::new(0.0, 1.0), Gaussian1D::new(1.0, 1.0)),
        (Gaussian1D::new(0.0, 1.0), Gaussian1D::new(3.0, 0.5)),
        (Gaussian1D::new(2.0, 2.0), Gaussian1D::new(-1.0, 1.0)),
    ];
    println!("{:>22} {:>22} {:>9} {:>9} {:>9} {:>9}", "p_X", "p_Y", "dtvd", "T", "kappa", "2*tvd");
    for (px, py) in pairs {
        let d = dtvd_closed_form(px, py)?;
        let mpm = mpm_closed_form(px, py)?;
        let area = misclassification_area(px, py, mpm.threshold)?;
        assert!((2.0 - 2.0 * area - d).abs() < 1e-12);
        println!(
            "{:>22} {:>22} {d:>9.6} {:>9.4} {:>9.4} {:>9.6}",
            format!("N({}, {}^2)", px.mu, px.sigma),
            format!("N({}, {}^2)", py.mu, py.sigma),
            mpm.threshold,
            mpm.kappa_star,
            2.0 * tvd_numeric(px, py)?,
        );
    }

    // Equal means: the distance is zero and the MPM has no boundary.
    let (px, py) = (Gaussian1D::new(1.0, 1.0), Gaussian1D::new(1.0, 3.0));
    println!("equal means: dtvd {} ({})", dtvd_closed_form(px, py)?, mpm_closed_form(px, py).unwrap_err());
    Ok(())
}
