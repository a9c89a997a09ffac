use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ResolvedConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything that determines the data files. Output location and thread
/// count are excluded, so runs that differ only in those share a hash.
#[derive(Serialize)]
struct ReproKey<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    resolved: &'a ResolvedConfig,
}

pub fn reproducibility_hash(config: &ExperimentConfig, resolved: &ResolvedConfig) -> String {
    let mut config = config.clone();
    config.output.dir = None;
    let mut resolved = resolved.clone();
    resolved.out_dir = Default::default();
    let key = ReproKey {
        tool: "gmcorr",
        version: VERSION,
        config: &config,
        resolved: &resolved,
    };
    let bytes = serde_json::to_vec(&key).expect("serializable");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Written as `manifest.json` next to the data files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    /// The configuration as read, before command-line overrides.
    pub config: ExperimentConfig,
    /// Effective master seed after overrides.
    pub master_seed: u64,
    pub point_seeds: Vec<u64>,
    pub trajectory_counts: Vec<usize>,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub sha256: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}
