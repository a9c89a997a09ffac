use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gmcorr_cli::{CliError, ExperimentConfig, Overrides, RunManifest, RunOptions};

#[derive(Parser)]
#[command(
    name = "gmcorr",
    version,
    about = "Genuine multipartite correlations along quantum trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides trajectory.master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run the experiment recorded in a manifest.json.
    Reproduce {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn report(outcome: &gmcorr_cli::RunOutcome) {
    for w in &outcome.manifest.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    eprintln!(
        "{} finished in {:.1} s on {} thread(s)",
        outcome.manifest.scenario, outcome.manifest.wall_clock_seconds, outcome.manifest.threads
    );
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            threads,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = gmcorr_cli::run(
                &cfg,
                &RunOptions {
                    threads,
                    overrides: Overrides { seed, out_dir: out },
                },
            )?;
            report(&outcome);
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let resolved = gmcorr_cli::validate(&cfg, &Overrides::default())?;
            println!(
                "ok: {} with {} point(s)",
                resolved.scenario.name(),
                resolved.points.len()
            );
        }
        Command::Reproduce {
            manifest,
            threads,
            out,
        } => {
            let text = std::fs::read_to_string(&manifest).map_err(|e| {
                CliError::Config(format!("cannot read {}: {e}", manifest.display()))
            })?;
            let m: RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("invalid manifest: {e}")))?;
            let outcome = gmcorr_cli::rerun_manifest(
                &m,
                &RunOptions {
                    threads,
                    overrides: Overrides {
                        seed: None,
                        out_dir: out,
                    },
                },
            )?;
            report(&outcome);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
