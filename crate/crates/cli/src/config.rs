use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

/// Defaults loadable from `--config FILE`. Command-line flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub vectors: Option<PathBuf>,
    pub dim: Option<usize>,
    pub attrs: Option<PathBuf>,
    pub header: Option<bool>,
    pub queries: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub workload: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub m: Option<usize>,
    pub ef: Option<usize>,
    pub seed: Option<u64>,
    pub reverse_edges: Option<bool>,
    pub threads: Option<usize>,
    pub strategy: Option<String>,
    pub beam: Option<usize>,
    pub beams: Option<Vec<usize>>,
    pub k: Option<usize>,
    pub oor_policy: Option<String>,
    pub n_queries: Option<usize>,
    pub fraction: Option<String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// `flag`, else the config value, else an error naming the flag.
pub fn required<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T> {
    flag.or(config)
        .with_context(|| format!("missing --{name} (give it on the command line or in --config)"))
}
