//! Encode one small set of vectors with every encoder and show the layouts.

use d3_encoding::codebook::{Codebook, GmmModel, InstanceSet};
use d3_encoding::encoders::{
    d3_raw, encode_d3, encode_fv, encode_hybrid, encode_vlad, FvOptions, HybridPart,
};
use ndarray::{array, Array1};

fn main() -> anyhow::Result<()> {
    let codebook = Codebook::new(array![[0.0, 0.0], [4.0, 4.0]], array![[1.0, 1.0], [1.0, 1.0]])?;
    let gmm = GmmModel::new(
        Array1::from_vec(vec![0.5, 0.5]),
        codebook.means().to_owned(),
        codebook.stds().to_owned(),
    )?;
    let set = InstanceSet::new(array![[0.5, -0.2], [1.0, 0.3], [3.5, 4.5], [4.2, 3.9], [0.1, 0.0]], Some(0))?;

    println!("raw D3 blocks (before normalisation): {:.4?}", d3_raw(&set, &codebook)?);
    let encodings = [
        ("d3", encode_d3(&set, &codebook)?),
        ("vlad", encode_vlad(&set, &codebook)?),
        ("fv", encode_fv(&set, &gmm, FvOptions::default())?),
        ("fv+w", encode_fv(&set, &gmm, FvOptions { include_weights: true, power_normalize: false })?),
        (
            "d3+fv",
            encode_hybrid(&set, &[HybridPart::D3(&codebook), HybridPart::Fv(&gmm, FvOptions::default())])?,
        ),
    ];
    for (name, e) in &encodings {
        let layout: Vec<String> =
            e.layout.iter().map(|b| format!("{:?}x{}x{}", b.kind, b.count, b.len)).collect();
        println!("{name:>6}: len {:>2} norm {:.3} [{}]", e.len(), e.norm(), layout.join(", "));
        println!("        {:.3?}", e.values);
    }

    // A set whose statistics equal the codebook exactly carries no signal.
    let centred = InstanceSet::new(array![[-1.0, -1.0], [1.0, 1.0]], None)?;
    let e = encode_d3(&centred, &Codebook::new(array![[0.0, 0.0]], array![[1.0, 1.0]])?)?;
    println!("centred set: degenerate = {}", e.degenerate);
    Ok(())
}
