//! File formats, the hold-out evaluation protocol and the `pltf` command
//! line, built on [`pltf_core`].
//!
//! - [`triples`]: plain-text `N T` / `i j t v` tensors.
//! - [`factor_file`]: little-endian binary dumps of factors and sample sets.
//! - [`synth`]: synthetic data from the hierarchical generative model.
//! - [`eval`] and [`experiment`]: fiber splits, AUC, method comparisons and
//!   the results CSV.
//! - [`config_file`] and [`manifest`]: `key=value` configs and replayable
//!   run manifests.

pub mod cli;
pub mod config_file;
mod error;
pub mod eval;
pub mod experiment;
pub mod factor_file;
mod fsutil;
pub mod manifest;
pub mod synth;
pub mod triples;

pub use error::{Error, Result};
pub use fsutil::{sha256_file, sha256_hex, write_atomic};
