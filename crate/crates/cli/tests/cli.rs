//! End-to-end checks of the `gmcorr` binary and shipped configs.

use std::path::{Path, PathBuf};
use std::process::Command;

use gmcorr_cli::table::parse_csv;
use gmcorr_cli::{ExperimentConfig, Overrides};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gmcorr"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn shipped_configs_validate() {
    let out = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let cfg = ExperimentConfig::load(&path).unwrap();
        cfg.resolve(&Overrides {
            seed: None,
            out_dir: Some(out.path().to_path_buf()),
        })
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn exit_codes_distinguish_config_and_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "scenario = \"lmg-jump-sweep\"\ntypo = 1\n",
    );
    let status = bin()
        .args(["validate", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let missing = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("absent.toml"))
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(2));

    // a strongly damped qubit exceeds the per-step jump probability guard
    // only once the trajectory runs
    let numerical = write(
        dir.path(),
        "guard.toml",
        "scenario = \"three-qubit-beamsplitter\"\n[trajectory]\ndt = 0.01\nt_final = 0.1\nrecord_stride = 1\nn_trajectories = 4\n[sweep]\ngamma_b = [20.0]\n",
    );
    let out = bin()
        .args(["run", "--config"])
        .arg(&numerical)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("trajectory 0"));
}

#[test]
fn run_writes_complete_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "scenario = \"lmg-jump-sweep\"\n[trajectory]\ndt = 0.01\nt_final = 3.0\nburn_in = 1.0\nrecord_stride = 50\nn_trajectories = 8\n[sweep]\nn = [3, 4]\nh = [0.0, 1.0, 2.0]\n",
    );
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--threads", "2", "--seed", "7", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let csv = std::fs::read_to_string(out_dir.join("lmg-jump-sweep.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# manifest_sha256=")));
    let (names, rows) = parse_csv(&csv);
    let point = names.iter().position(|n| n == "point").unwrap();
    let time = names.iter().position(|n| n == "time").unwrap();
    // 6 points × recorded times {1, 1.5, …, 3}
    assert_eq!(rows.len(), 6 * 5);
    let mut keys: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r[point].clone(), r[time].clone()))
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), rows.len());

    let summary = std::fs::read_to_string(out_dir.join("lmg-jump-sweep-summary.csv")).unwrap();
    assert_eq!(parse_csv(&summary).1.len(), 6);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["trajectory_counts"].as_array().unwrap().len(), 6);
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("lmg-jump-sweep.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 30);
}

#[test]
fn seed_changes_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "seed.toml",
        "scenario = \"three-qubit-entropy-cross\"\n[trajectory]\ndt = 0.01\nt_final = 1.0\nrecord_stride = 10\nn_trajectories = 50\n",
    );
    let mut outputs = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        assert!(bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--seed", seed, "--out"])
            .arg(&out)
            .status()
            .unwrap()
            .success());
        outputs.push(
            parse_csv(&std::fs::read_to_string(out.join("three-qubit-entropy-cross.csv")).unwrap())
                .1,
        );
    }
    assert_ne!(outputs[0], outputs[1]);
}
