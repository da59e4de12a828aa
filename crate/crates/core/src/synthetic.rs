//! Seeded synthetic recognition data.
//!
//! Every class draws its instance vectors from the same four prototype
//! clusters. In [`Mode::MeanShift`] each class moves every prototype by its
//! own offset; in [`Mode::VarianceShift`] the cluster centres are shared and
//! only the within-cluster spread changes, from `BASE_SIGMA` for the first
//! class to twice that for the last.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::codebook::InstanceSet;
use crate::error::{Error, Result};
use crate::io::{self, Manifest, ManifestEntry};

pub const PROTOTYPES: usize = 4;
/// Spread of prototype centres around the origin.
pub const PROTOTYPE_SPREAD: f64 = 4.0;
/// Spread of the per-class prototype offsets in mean-shift mode.
pub const CLASS_OFFSET: f64 = 1.0;
/// Per-entity jitter of every cluster centre.
pub const ENTITY_JITTER: f64 = 0.1;
pub const BASE_SIGMA: f64 = 1.0;
pub const TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    MeanShift,
    VarianceShift,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::MeanShift => "mean-shift",
            Mode::VarianceShift => "variance-shift",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-shift" => Ok(Mode::MeanShift),
            "variance-shift" => Ok(Mode::VarianceShift),
            other => Err(Error::invalid(format!("unknown synthetic mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub entities_per_class: usize,
    pub vectors_per_entity: usize,
    pub dim: usize,
    pub mode: Mode,
    pub seed: u64,
}

/// Generated entities plus the per-class train/test split.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    /// Class-major: all entities of class 0, then class 1, ...
    pub sets: Vec<InstanceSet>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SyntheticData {
    pub fn subset(&self, idx: &[usize]) -> Vec<InstanceSet> {
        idx.iter().map(|&i| self.sets[i].clone()).collect()
    }

    pub fn labels(&self, idx: &[usize]) -> Vec<i64> {
        idx.iter().map(|&i| self.sets[i].label().expect("synthetic sets are labelled")).collect()
    }
}

fn class_sigma(mode: Mode, class: usize, classes: usize) -> f64 {
    match mode {
        Mode::MeanShift => BASE_SIGMA,
        Mode::VarianceShift if classes < 2 => BASE_SIGMA,
        Mode::VarianceShift => BASE_SIGMA * 2f64.powf(class as f64 / (classes - 1) as f64),
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    if cfg.classes == 0 || cfg.entities_per_class == 0 || cfg.vectors_per_entity == 0 || cfg.dim == 0 {
        return Err(Error::invalid("classes, entities, vectors and dim must all be >= 1"));
    }
    let (c, d) = (cfg.classes, cfg.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let spread = Normal::new(0.0, PROTOTYPE_SPREAD).expect("valid normal");
    let offset = Normal::new(0.0, CLASS_OFFSET).expect("valid normal");
    let jitter = Normal::new(0.0, ENTITY_JITTER).expect("valid normal");

    let prototypes = Array2::from_shape_fn((PROTOTYPES, d), |_| spread.sample(&mut rng));
    // offsets[class][p, j]; all zero when only the spread differs.
    let offsets: Vec<Array2<f64>> = (0..c)
        .map(|_| match cfg.mode {
            Mode::MeanShift => Array2::from_shape_fn((PROTOTYPES, d), |_| offset.sample(&mut rng)),
            Mode::VarianceShift => Array2::zeros((PROTOTYPES, d)),
        })
        .collect();

    let mut sets = Vec::with_capacity(c * cfg.entities_per_class);
    for (class, class_offset) in offsets.iter().enumerate() {
        let sigma = class_sigma(cfg.mode, class, c);
        for _ in 0..cfg.entities_per_class {
            let centres = &prototypes
                + class_offset
                + &Array2::from_shape_fn((PROTOTYPES, d), |_| jitter.sample(&mut rng));
            let mut vectors = Array2::zeros((cfg.vectors_per_entity, d));
            for mut row in vectors.outer_iter_mut() {
                let p = rng.random_range(0..PROTOTYPES);
                for (j, v) in row.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    // Round through f32 so in-memory data equals what is written.
                    *v = f64::from((centres[[p, j]] + sigma * z) as f32);
                }
            }
            sets.push(InstanceSet::new(vectors, Some(class as i64))?);
        }
    }

    let n_train = ((cfg.entities_per_class as f64) * TRAIN_FRACTION).round() as usize;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in 0..c {
        let base = class * cfg.entities_per_class;
        train.extend(base..base + n_train);
        test.extend(base + n_train..base + cfg.entities_per_class);
    }
    Ok(SyntheticData { sets, train, test })
}

/// Paths written by [`write_dataset`].
#[derive(Debug, Clone)]
pub struct DatasetFiles {
    pub manifest: PathBuf,
    pub train: PathBuf,
    pub test: PathBuf,
}

/// Writes `entities/*.svec` plus `manifest.tsv`, `train.tsv` and `test.tsv`.
pub fn write_dataset(data: &SyntheticData, out: &Path) -> Result<DatasetFiles> {
    let entities = out.join("entities");
    fs::create_dir_all(&entities).map_err(|e| Error::io(&entities, e))?;
    let mut all = Manifest::default();
    for (i, set) in data.sets.iter().enumerate() {
        let label = set.label().expect("synthetic sets are labelled");
        let path = entities.join(format!("c{label}_{i:05}.svec"));
        io::write_svec(&path, &set.vectors().mapv(|v| v as f32))?;
        all.entries.push(ManifestEntry { label, path });
    }
    let pick = |idx: &[usize]| Manifest { entries: idx.iter().map(|&i| all.entries[i].clone()).collect() };
    let files = DatasetFiles {
        manifest: out.join("manifest.tsv"),
        train: out.join("train.tsv"),
        test: out.join("test.tsv"),
    };
    for (path, m) in
        [(&files.manifest, all.clone()), (&files.train, pick(&data.train)), (&files.test, pick(&data.test))]
    {
        io::write_atomic(path, m.render(out).as_bytes())?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: Mode, seed: u64) -> SyntheticConfig {
        SyntheticConfig { classes: 3, entities_per_class: 10, vectors_per_entity: 50, dim: 4, mode, seed }
    }

    #[test]
    fn shape_and_split() {
        let data = generate(&cfg(Mode::MeanShift, 1)).unwrap();
        assert_eq!(data.sets.len(), 30);
        assert_eq!(data.train.len(), 21);
        assert_eq!(data.test.len(), 9);
        assert_eq!(data.labels(&data.test), [0, 0, 0, 1, 1, 1, 2, 2, 2]);
        assert!(data.sets.iter().all(|s| s.len() == 50 && s.dim() == 4));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = generate(&cfg(Mode::VarianceShift, 5)).unwrap();
        let b = generate(&cfg(Mode::VarianceShift, 5)).unwrap();
        let c = generate(&cfg(Mode::VarianceShift, 6)).unwrap();
        assert_eq!(a.sets, b.sets);
        assert_ne!(a.sets, c.sets);
    }

    #[test]
    fn variance_shift_doubles_the_spread() {
        assert_eq!(class_sigma(Mode::VarianceShift, 0, 3), BASE_SIGMA);
        assert_eq!(class_sigma(Mode::VarianceShift, 2, 3), 2.0 * BASE_SIGMA);
        assert_eq!(class_sigma(Mode::MeanShift, 2, 3), BASE_SIGMA);
        assert!("bogus".parse::<Mode>().is_err());
        assert_eq!("variance-shift".parse::<Mode>().unwrap().to_string(), "variance-shift");
    }

    #[test]
    fn written_dataset_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let data = generate(&cfg(Mode::MeanShift, 2)).unwrap();
        let files = write_dataset(&data, dir.path()).unwrap();
        let train = Manifest::read(&files.train).unwrap();
        assert_eq!(train.labels(), data.labels(&data.train));
        assert_eq!(train.load_sets().unwrap(), data.subset(&data.train));
        assert_eq!(Manifest::read(&files.manifest).unwrap().entries.len(), 30);
    }
}
