//! Output directory bookkeeping and the per-command run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const TOOL: &str = "pccd";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes files under one directory and remembers what it wrote.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<OutputRecord>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `bytes` to `rel` (slash-separated, relative to the root).
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(OutputRecord { path: rel.to_string(), bytes: bytes.len(), sha256: hex(&Sha256::digest(bytes)) });
        Ok(path)
    }

    pub fn written(&self) -> &[OutputRecord] {
        &self.written
    }

    /// Records the run next to its outputs as `run_manifest.<command>.json`.
    pub fn finish(self, command: &str, argv: &[String], cfg: &RunConfig) -> Result<PathBuf> {
        let manifest = RunManifest {
            tool: TOOL,
            version: VERSION,
            command,
            argv,
            seed: cfg.seed,
            config: cfg,
            outputs: &self.written,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.root.join(format!("run_manifest.{command}.json"));
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    argv: &'a [String],
    seed: Option<u64>,
    config: &'a RunConfig,
    outputs: &'a [OutputRecord],
}
