//! Train a k-means codebook and a diagonal GMM on pooled vectors, then save
//! and reload both.

use d3_encoding::codebook::{gmm_posteriors, train_gmm_em_traced, train_kmeans_traced};
use d3_encoding::io;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> anyhow::Result<()> {
    // Three blobs in the plane.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.4)?;
    let centres = [[-3.0, 0.0], [3.0, 0.0], [0.0, 4.0]];
    let data = Array2::from_shape_fn((900, 2), |(i, j)| centres[i % 3][j] + noise.sample(&mut rng));

    let (codebook, trace) = train_kmeans_traced(data.view(), 3, 1, 100)?;
    println!(
        "k-means: {} iterations, objective {:.3} -> {:.3}",
        trace.iterations,
        trace.objective[0],
        trace.objective.last().unwrap()
    );
    println!("centres\n{:.3}\nstds\n{:.3}", codebook.means(), codebook.stds());

    let (gmm, trace) = train_gmm_em_traced(data.view(), 3, 1, 100, 1e-8)?;
    println!(
        "EM: {} steps, mean log-likelihood {:.4}",
        trace.log_likelihood.len(),
        trace.log_likelihood.last().unwrap()
    );
    println!("weights {:.3}", gmm.weights());
    println!("posterior of (0, 4): {:.4?}", gmm_posteriors(&gmm, &[0.0, 4.0])?);

    let dir = tempfile::tempdir()?;
    let (cb_path, gm_path) = (dir.path().join("words.d3cb"), dir.path().join("mix.d3gm"));
    io::write_codebook(&cb_path, &codebook)?;
    io::write_gmm(&gm_path, &gmm)?;
    assert_eq!(io::read_codebook(&cb_path)?, codebook);
    assert_eq!(io::read_gmm(&gm_path)?, gmm);
    println!("saved {} and {} bytes", std::fs::metadata(&cb_path)?.len(), std::fs::metadata(&gm_path)?.len());
    Ok(())
}
