//! Run manifests written next to every CLI output.
//!
//! A manifest is a `key=value` file holding the resolved value of every flag
//! of the subcommand (so it can be passed back through `--config` to replay
//! the run) plus `manifest.*` keys recording the subcommand, tool version
//! and the SHA-256 of each input and output.

use std::path::{Path, PathBuf};

use crate::config_file::format_config;
use crate::fsutil::{sha256_file, write_atomic};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    /// Resolved flags in declaration order.
    pub config: Vec<(String, String)>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: Vec<(String, String)>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Manifest text with checksums of the current file contents.
    pub fn render(&self) -> Result<String> {
        let mut entries = vec![
            ("manifest.subcommand".to_string(), self.subcommand.clone()),
            ("manifest.version".to_string(), self.version.clone()),
        ];
        for (kind, paths) in [("input", &self.inputs), ("output", &self.outputs)] {
            for p in paths {
                entries.push((
                    format!("manifest.{kind}.{}", p.display()),
                    format!("sha256:{}", sha256_file(p)?),
                ));
            }
        }
        entries.extend(self.config.iter().cloned());
        Ok(format!("# pltf run manifest\n{}", format_config(&entries)))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render()?.as_bytes())
    }
}

/// `<output>.manifest`
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}
