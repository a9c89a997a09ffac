//! Config-driven experiment runner for genuine multipartite correlations.
//!
//! A TOML file names a scenario and its sweep; [`run`] resolves defaults,
//! validates everything before computing, executes the sweep on a rayon pool
//! and writes CSV/JSON tables plus a `manifest.json`. Output files depend only
//! on the configuration and seed, never on the thread count.

pub mod config;
pub mod error;
pub mod manifest;
pub mod scenarios;
pub mod seeds;
pub mod steady;
pub mod table;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{ExperimentConfig, Overrides, ResolvedConfig, Scenario};
pub use error::CliError;
pub use manifest::RunManifest;
pub use table::{Cell, Table};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
    pub overrides: Overrides,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub resolved: ResolvedConfig,
    pub tables: Vec<Table>,
    pub manifest: RunManifest,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Resolves and validates without running anything.
pub fn validate(
    config: &ExperimentConfig,
    overrides: &Overrides,
) -> Result<ResolvedConfig, CliError> {
    config.resolve(overrides)
}

pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let resolved = config.resolve(&options.overrides)?;
    let pool = match options.threads {
        Some(0) => return Err(CliError::Config("--threads must be >= 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?,
        None => rayon::ThreadPoolBuilder::new()
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?,
    };
    let threads = pool.current_num_threads();
    let output = pool.install(|| scenarios::execute(&resolved))?;

    let sha256 = manifest::reproducibility_hash(config, &resolved);
    let header = vec![
        format!(
            "gmcorr {} scenario={} master_seed={}",
            manifest::VERSION,
            resolved.scenario.name(),
            resolved.master_seed
        ),
        format!("manifest_sha256={sha256}"),
    ];
    let mut files = Vec::new();
    for table in &output.tables {
        files.extend(table.write(&resolved.out_dir, &header, &resolved.formats)?);
    }
    let manifest = RunManifest {
        tool: "gmcorr".into(),
        version: manifest::VERSION.into(),
        scenario: resolved.scenario.name().into(),
        config: config.clone(),
        master_seed: resolved.master_seed,
        point_seeds: resolved
            .expand_points()
            .iter()
            .map(|p| p.trajectory.master_seed)
            .collect(),
        trajectory_counts: output.trajectory_counts.clone(),
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        warnings: output.warnings.clone(),
        sha256,
        threads,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = resolved.out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
    text.push('\n');
    std::fs::write(&manifest_path, text)?;
    files.push(manifest_path);
    Ok(RunOutcome {
        resolved,
        tables: output.tables,
        manifest,
        files,
    })
}

/// Re-runs the experiment recorded in a manifest with its effective seed.
pub fn rerun_manifest(
    manifest: &RunManifest,
    options: &RunOptions,
) -> Result<RunOutcome, CliError> {
    let mut options = options.clone();
    options.overrides.seed = Some(manifest.master_seed);
    run(&manifest.config, &options)
}
