//! The `d3` command line tool.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or format error, 4 numeric
//! failure. Diagnostics go to standard error; standard output carries only
//! results (`dtvd` values and the one-line `encoder,K,accuracy` CSV of `eval`).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::codebook::{train_gmm_em, train_kmeans, InstanceSet};
use crate::diagnostics::mi_report;
use crate::distdist::{dtvd_closed_form, mpm_closed_form, tvd_numeric, Gaussian1D};
use crate::encoders::{
    encode_batch, encode_d3, encode_fv, encode_hybrid, encode_vlad, FvOptions, HybridPart,
};
use crate::error::{Error, Result};
use crate::eval::{accuracy, fit_linear_ovr, DEFAULT_LAMBDA};
use crate::experiment::{stack, EM_MAX_ITERS, EM_TOL, KMEANS_MAX_ITERS};
use crate::io::{self, pool_vectors, Manifest};
use crate::synthetic::{self, Mode, SyntheticConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "d3", version, about = "Distribution-distance set encodings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    D3,
    Vlad,
    Fv,
    Hybrid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    MeanShift,
    VarianceShift,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a k-means codebook on all vectors listed in a manifest.
    TrainCodebook {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = KMEANS_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a diagonal GMM by EM on all vectors listed in a manifest.
    TrainGmm {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = EM_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = EM_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode every set of a manifest into one SVEC matrix, one row per entry.
    Encode {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        manifest: PathBuf,
        /// Required by d3, vlad and hybrid.
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Required by fv and hybrid.
        #[arg(long)]
        gmm: Option<PathBuf>,
        #[arg(long)]
        no_power_norm: bool,
        #[arg(long)]
        include_weights: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-dimension mutual information of encodings with manifest labels.
    MiReport {
        #[arg(long)]
        encodings: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// `dim,mi_bits` CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional `q,mi_bits` quantile curve CSV.
        #[arg(long)]
        quantiles: Option<PathBuf>,
    },
    /// Fit a one-vs-rest ridge classifier and print test accuracy.
    Eval {
        #[arg(long)]
        train_encodings: PathBuf,
        #[arg(long)]
        train_manifest: PathBuf,
        #[arg(long)]
        test_encodings: PathBuf,
        #[arg(long)]
        test_manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        /// Encoder name echoed in the result line.
        #[arg(long, default_value = "-")]
        encoder: String,
        /// Dictionary size echoed in the result line.
        #[arg(long, default_value = "-")]
        k: String,
    },
    /// Closed-form distance, MPM boundary and numeric TVD of two Gaussians.
    Dtvd {
        #[arg(long, allow_hyphen_values = true)]
        mu_x: f64,
        #[arg(long)]
        sigma_x: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu_y: f64,
        #[arg(long)]
        sigma_y: f64,
    },
    /// Write a seeded synthetic dataset with train/test manifests.
    GenSynthetic {
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        entities_per_class: usize,
        #[arg(long)]
        vectors_per_entity: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli.command, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            let mut msg = format!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                if !msg.contains(&s.to_string()) {
                    msg.push_str(&format!(": {s}"));
                }
                src = s.source();
            }
            eprintln!("{msg}");
            e.exit_code()
        }
    }
}

fn load_sets(manifest: &Path) -> Result<(Manifest, Vec<InstanceSet>)> {
    let m = Manifest::read(manifest)?;
    if m.entries.is_empty() {
        return Err(Error::InsufficientData(format!("{} lists no entries", manifest.display())));
    }
    let sets = m.load_sets()?;
    Ok((m, sets))
}

/// Encoding matrix whose rows must line up with the manifest entries.
fn load_encodings(path: &Path, manifest: &Manifest) -> Result<ndarray::Array2<f64>> {
    let enc = io::read_svec(path)?;
    if enc.nrows() != manifest.entries.len() {
        return Err(Error::Validation(format!(
            "{} has {} rows but the manifest lists {} entries",
            path.display(),
            enc.nrows(),
            manifest.entries.len()
        )));
    }
    Ok(enc.mapv(f64::from))
}

fn write_csv(path: &Path, text: &str) -> Result<()> {
    io::write_atomic(path, text.as_bytes())
}

fn out_err(e: std::io::Error) -> Failure {
    Failure::Lib(Error::io("<stdout>", e))
}

fn execute(command: Command, out: &mut impl Write) -> std::result::Result<(), Failure> {
    match command {
        Command::TrainCodebook { manifest, k, seed, max_iters, out: path } => {
            let (_, sets) = load_sets(&manifest)?;
            let cb = train_kmeans(pool_vectors(&sets)?.view(), k, seed, max_iters)?;
            io::write_codebook(&path, &cb)?;
            eprintln!("wrote codebook K={} d={} to {}", cb.k(), cb.dim(), path.display());
        }
        Command::TrainGmm { manifest, k, seed, max_iters, tol, out: path } => {
            let (_, sets) = load_sets(&manifest)?;
            let gmm = train_gmm_em(pool_vectors(&sets)?.view(), k, seed, max_iters, tol)?;
            io::write_gmm(&path, &gmm)?;
            eprintln!("wrote GMM K={} d={} to {}", gmm.k(), gmm.dim(), path.display());
        }
        Command::Encode { method, manifest, codebook, gmm, no_power_norm, include_weights, out: path } => {
            let needs_cb = matches!(method, MethodArg::D3 | MethodArg::Vlad | MethodArg::Hybrid);
            let needs_gmm = matches!(method, MethodArg::Fv | MethodArg::Hybrid);
            if needs_cb && codebook.is_none() {
                return Err(Failure::Usage(
                    format!("--method {method:?} requires --codebook").to_lowercase(),
                ));
            }
            if needs_gmm && gmm.is_none() {
                return Err(Failure::Usage(format!("--method {method:?} requires --gmm").to_lowercase()));
            }
            let cb = codebook.as_deref().filter(|_| needs_cb).map(io::read_codebook).transpose()?;
            let gm = gmm.as_deref().filter(|_| needs_gmm).map(io::read_gmm).transpose()?;
            let opts = FvOptions { include_weights, power_normalize: !no_power_norm };
            let (_, sets) = load_sets(&manifest)?;
            let encodings = encode_batch(&sets, |y| match method {
                MethodArg::D3 => encode_d3(y, cb.as_ref().expect("checked")),
                MethodArg::Vlad => encode_vlad(y, cb.as_ref().expect("checked")),
                MethodArg::Fv => encode_fv(y, gm.as_ref().expect("checked"), opts),
                MethodArg::Hybrid => encode_hybrid(
                    y,
                    &[
                        HybridPart::D3(cb.as_ref().expect("checked")),
                        HybridPart::Fv(gm.as_ref().expect("checked"), opts),
                    ],
                ),
            })?;
            let degenerate = encodings.iter().filter(|e| e.degenerate).count();
            if degenerate > 0 {
                eprintln!("warning: {degenerate} all-zero encodings");
            }
            io::write_svec(&path, &stack(&encodings)?.mapv(|v| v as f32))?;
        }
        Command::MiReport { encodings, manifest, out: path, quantiles } => {
            let m = Manifest::read(&manifest)?;
            let enc = load_encodings(&encodings, &m)?;
            let report = mi_report(enc.view(), &m.labels())?;
            write_csv(&path, &io::mi_csv(&report))?;
            if let Some(q) = quantiles {
                write_csv(&q, &io::quantile_csv(&report))?;
            }
            eprintln!(
                "median MI {:.6} bits over {} dimensions",
                report.median(),
                report.per_dimension_mi.len()
            );
        }
        Command::Eval {
            train_encodings,
            train_manifest,
            test_encodings,
            test_manifest,
            lambda,
            encoder,
            k,
        } => {
            let trm = Manifest::read(&train_manifest)?;
            let tem = Manifest::read(&test_manifest)?;
            let tr = load_encodings(&train_encodings, &trm)?;
            let te = load_encodings(&test_encodings, &tem)?;
            let model = fit_linear_ovr(tr.view(), &trm.labels(), lambda)?;
            let acc = accuracy(&model, te.view(), &tem.labels())?;
            writeln!(out, "{encoder},{k},{acc}").map_err(out_err)?;
        }
        Command::Dtvd { mu_x, sigma_x, mu_y, sigma_y } => {
            let px = Gaussian1D::new(mu_x, sigma_x);
            let py = Gaussian1D::new(mu_y, sigma_y);
            writeln!(out, "dtvd {}", dtvd_closed_form(px, py)?).map_err(out_err)?;
            match mpm_closed_form(px, py) {
                Ok(mpm) => {
                    writeln!(out, "threshold {}", mpm.threshold).map_err(out_err)?;
                    writeln!(out, "kappa_star {}", mpm.kappa_star).map_err(out_err)?;
                    writeln!(out, "a_star {}", mpm.a_star).map_err(out_err)?;
                    writeln!(out, "b_star {}", mpm.b_star).map_err(out_err)?;
                }
                Err(Error::DegenerateBoundary { .. }) => {
                    eprintln!("note: equal means, the MPM boundary is undefined");
                }
                Err(e) => return Err(e.into()),
            }
            writeln!(out, "tvd {}", tvd_numeric(px, py)?).map_err(out_err)?;
        }
        Command::GenSynthetic {
            classes,
            entities_per_class,
            vectors_per_entity,
            dim,
            mode,
            seed,
            out: dir,
        } => {
            let mode = match mode {
                ModeArg::MeanShift => Mode::MeanShift,
                ModeArg::VarianceShift => Mode::VarianceShift,
            };
            let cfg = SyntheticConfig { classes, entities_per_class, vectors_per_entity, dim, mode, seed };
            let data = synthetic::generate(&cfg)?;
            let files = synthetic::write_dataset(&data, &dir)?;
            eprintln!(
                "wrote {} entities ({} train, {} test) to {}",
                data.sets.len(),
                data.train.len(),
                data.test.len(),
                files.manifest.parent().unwrap_or(&dir).display()
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["d3", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["d3", "dtvd", "--mu-x", "0"]), EXIT_USAGE);
        assert_eq!(
            run(["d3", "encode", "--method", "fv", "--manifest", "m", "--codebook", "c", "--out", "o"]),
            EXIT_USAGE
        );
        assert_eq!(
            run(["d3", "encode", "--method", "d3", "--manifest", "m", "--gmm", "g", "--out", "o"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn dtvd_output() {
        let cmd = Command::Dtvd { mu_x: 0.0, sigma_x: 1.0, mu_y: 1.0, sigma_y: 1.0 };
        let mut buf = Vec::new();
        assert!(execute(cmd, &mut buf).is_ok());
        let text = String::from_utf8(buf).unwrap();
        let get = |key: &str| -> f64 {
            text.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap()
        };
        assert!((get("dtvd ") - 0.765849).abs() < 1e-6);
        assert!((get("threshold ") - 0.5).abs() < 1e-12);
        assert!((get("kappa_star ") - 0.5).abs() < 1e-12);
        assert!((get("tvd ") - 0.382925).abs() < 1e-6);

        let mut buf = Vec::new();
        let cmd = Command::Dtvd { mu_x: 2.0, sigma_x: 1.0, mu_y: 2.0, sigma_y: 3.0 };
        assert!(execute(cmd, &mut buf).is_ok());
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("dtvd 0\n") && text.contains("tvd ") && !text.contains("threshold"));
        assert_eq!(run(["d3", "dtvd", "--mu-x", "0", "--sigma-x", "0", "--mu-y", "1", "--sigma-y", "1"]), 3);
    }

    #[test]
    fn missing_manifest_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("missing.tsv");
        let o = dir.path().join("cb.d3cb");
        assert_eq!(
            run([
                "d3",
                "train-codebook",
                "--manifest",
                m.to_str().unwrap(),
                "--k",
                "2",
                "--out",
                o.to_str().unwrap()
            ]),
            3
        );
    }
}
