//! Experiment configuration files: a model plus optional per-command
//! sections, each overridable from the command line.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use vrjp_core::model::ModelSpec;

/// Command-line overrides of the per-command sections.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct SimSection {
    pub start: Option<u32>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub max_jumps: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct ExchSection {
    pub pairs: Option<u64>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub x_horizon: Option<f64>,
    pub max_jumps: Option<u64>,
    pub start: Option<u32>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct FreedmanSection {
    pub string_a: Option<Vec<u32>>,
    pub string_b: Option<Vec<u32>>,
    pub grids: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub max_jumps: Option<u64>,
    pub z_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct CharacterizeSection {
    pub checks: Option<Vec<String>>,
    pub pairs: Option<u64>,
    pub seed: Option<u64>,
    pub grid_max: Option<f64>,
    pub grid_step: Option<f64>,
    pub lambda_tol: Option<f64>,
    pub reversibility_tol: Option<f64>,
    pub exchangeability_tol: Option<f64>,
    pub x_horizon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct CanonicalizeSection {
    pub tolerance: Option<f64>,
    pub verify_pairs: Option<u64>,
    pub seed: Option<u64>,
}

/// A model plus optional command sections. Unknown fields are tolerated so
/// canonicalize output (which carries extra metadata) reloads cleanly.
#[derive(Debug, Clone, Deserialize)]
pub struct ConfigFile {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub exchangeability: ExchSection,
    #[serde(default)]
    pub freedman: FreedmanSection,
    #[serde(default)]
    pub characterize: CharacterizeSection,
    #[serde(default)]
    pub canonicalize: CanonicalizeSection,
}

pub fn load(path: &Path) -> anyhow::Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("bad config JSON in {}", path.display()))
}
