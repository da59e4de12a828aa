//! Fixed-length encodings of sets of feature vectors.
//!
//! A set of instance vectors (the local descriptors of one image or video)
//! is summarised against a dictionary learned from training data:
//!
//! - [`encoders::encode_d3`] compares each dictionary cluster with the matching
//!   part of the set through a closed-form distance between 1-D Gaussians
//!   ([`distdist::dtvd_closed_form`]);
//! - [`encoders::encode_vlad`] and [`encoders::encode_fv`] are the usual
//!   residual and Fisher Vector baselines;
//! - [`encoders::encode_hybrid`] concatenates any of them.
//!
//! [`codebook`] trains k-means codebooks and diagonal GMMs, [`diagnostics`]
//! scores encoding dimensions by mutual information with the labels, [`eval`]
//! fits a one-vs-rest ridge classifier, and [`experiment`] wires these into a
//! train/encode/classify pipeline. [`io`] holds the binary formats and
//! [`cli`] the `d3` tool.

pub mod cli;
pub mod codebook;
pub mod diagnostics;
pub mod distdist;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
mod par;
pub mod synthetic;

pub use error::{Error, Result};
