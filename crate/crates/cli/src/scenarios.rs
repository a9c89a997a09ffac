//! Scenario execution. Each scenario turns resolved points into tables.

use gmcorr::correlations::{sample_cut_entropies, CorrelationSeries};
use gmcorr::dicke::{dicke_reduced_state, dicke_state, dicke_to_register, schmidt_row};
use gmcorr::lindblad::{integrate_master, spectral_norm_psd, LindbladSpec};
use gmcorr::trajectory::{run_ensemble, Method, HOMODYNE_STEP_GUARD, JUMP_STEP_GUARD};
use gmcorr::{von_neumann_entropy, Bipartition};
use rayon::prelude::*;

use crate::config::{Point, PointParams, ResolvedConfig, Scenario};
use crate::error::CliError;
use crate::steady::steady_state;
use crate::table::{Cell, Table};

/// Tables plus diagnostics of one scenario run.
#[derive(Clone, Debug, Default)]
pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    /// Trajectories actually run per point.
    pub trajectory_counts: Vec<usize>,
}

/// Fraction of a step guard above which a warning is recorded.
const NEAR_MISS: f64 = 0.5;

pub fn execute(config: &ResolvedConfig) -> Result<ScenarioOutput, CliError> {
    let points = config.expand_points();
    let mut out = ScenarioOutput::default();
    for p in &points {
        if let Some(w) = guard_near_miss(p)? {
            out.warnings.push(w);
        }
    }
    match config.scenario {
        Scenario::OracleCheck => oracle_check(&points, &mut out)?,
        Scenario::ThreeQubitEntropyCross | Scenario::ThreeQubitBeamsplitter => {
            three_qubit(config.scenario, &points, &mut out)?
        }
        Scenario::LmgJumpSweep | Scenario::LmgHomodyneSweep => lmg_sweep(
            config.scenario,
            config.steady_state_stride,
            &points,
            &mut out,
        )?,
        Scenario::DickeValidate => {
            dicke_validate(config.brute_force_max_n, config.schmidt_max_n, &mut out)?
        }
    }
    Ok(out)
}

/// Static bound on the per-step jump probability or diffusive strength.
fn guard_near_miss(p: &Point) -> Result<Option<String>, CliError> {
    let spec = p.spec()?;
    let dt = p.trajectory.dt;
    let (value, limit, what) = match p.trajectory.method {
        Method::Jump => {
            let bound: f64 = spec
                .jumps()
                .iter()
                .map(|j| spectral_norm_psd(&(j.adjoint() * j)))
                .sum();
            (dt * bound, JUMP_STEP_GUARD, "dt * sum ||J^dag J||")
        }
        Method::Diffusive => (
            dt * spec.max_jump_rate(),
            HOMODYNE_STEP_GUARD,
            "dt * ||L^dag L||",
        ),
    };
    Ok((value > NEAR_MISS * limit).then(|| {
        format!(
            "point {}: {what} = {value:.4} is within a factor {NEAR_MISS} of the guard {limit}",
            p.index
        )
    }))
}

/// Parameter columns identifying a point.
fn point_columns(params: &PointParams) -> Vec<(&'static str, &'static str)> {
    match params {
        PointParams::ThreeQubit { .. } => vec![("point", ""), ("gamma_b", "rate")],
        PointParams::Lmg { .. } => vec![
            ("point", ""),
            ("n", ""),
            ("h", "lambda"),
            ("theta_deg", "deg"),
        ],
    }
}

fn point_cells(index: usize, params: &PointParams) -> Vec<Cell> {
    match *params {
        PointParams::ThreeQubit { gamma_b, .. } => vec![index.into(), gamma_b.into()],
        PointParams::Lmg {
            n, h, theta_deg, ..
        } => {
            vec![index.into(), n.into(), h.into(), theta_deg.into()]
        }
    }
}

fn time_unit(params: &PointParams) -> &'static str {
    match params {
        PointParams::ThreeQubit { .. } => "1/rate",
        PointParams::Lmg { .. } => "1/lambda",
    }
}

fn argmin_label(cut: &Bipartition) -> String {
    match cut {
        Bipartition::Block { n1, .. } => n1.to_string(),
        Bipartition::Parties { .. } => cut.to_string(),
    }
}

fn oracle_check(points: &[Point], out: &mut ScenarioOutput) -> Result<(), CliError> {
    let first = &points[0].params;
    let mut cols = point_columns(first);
    cols.extend([
        ("time", time_unit(first)),
        ("trace_distance", ""),
        ("n_trajectories", ""),
    ]);
    let mut table = Table::new("oracle-check", &cols);
    let results = points
        .par_iter()
        .map(|p| -> Result<_, CliError> {
            let spec = p.spec()?;
            let psi0 = p.params.initial_state()?;
            let ensemble = run_ensemble(&psi0, &spec, &p.trajectory, &[])?;
            let oracle = integrate_master(
                &spec,
                &psi0.projector(),
                p.trajectory.dt,
                p.trajectory.t_final,
                p.trajectory.record_stride,
            )?;
            let distances = ensemble
                .density
                .iter()
                .zip(&oracle.states)
                .map(|(a, b)| a.trace_distance(b))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((ensemble.times, distances, ensemble.n_trajectories))
        })
        .collect::<Vec<_>>();
    for (p, r) in points.iter().zip(results) {
        let (times, distances, n) = r?;
        for (t, d) in times.iter().zip(distances) {
            let mut row = point_cells(p.index, &p.params);
            row.extend([Cell::Float(*t), Cell::Float(d), n.into()]);
            table.push(row);
        }
        out.trajectory_counts.push(n);
    }
    out.tables.push(table);
    Ok(())
}

/// Per-party entropy columns exist for qubit registers (single-party cuts).
fn single_party_cuts(series: &CorrelationSeries) -> Vec<usize> {
    series
        .cuts
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c.cut, Bipartition::Parties { .. }) && c.cut.subset_size() == 1)
        .map(|(i, _)| i)
        .collect()
}

/// First time at which `a − b` changes sign, linearly interpolated.
pub fn crossing_time(times: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    (1..d.len()).find_map(|k| {
        let (d0, d1) = (d[k - 1], d[k]);
        if d0 != 0.0 && d0.signum() != d1.signum() {
            Some(times[k - 1] + (times[k] - times[k - 1]) * d0 / (d0 - d1))
        } else {
            None
        }
    })
}

fn three_qubit(
    scenario: Scenario,
    points: &[Point],
    out: &mut ScenarioOutput,
) -> Result<(), CliError> {
    let results = points
        .par_iter()
        .map(|p| -> Result<CorrelationSeries, CliError> {
            let spec = p.spec()?;
            let psi0 = p.params.initial_state()?;
            Ok(sample_cut_entropies(&psi0, &spec, &p.trajectory)?.series())
        })
        .collect::<Vec<_>>();
    let series: Vec<CorrelationSeries> = results.into_iter().collect::<Result<_, _>>()?;

    let first = &points[0].params;
    let mut cols = point_columns(first);
    cols.extend([
        ("time", time_unit(first)),
        ("cu_mean", "bits"),
        ("cu_stderr", "bits"),
        ("min_of_means", "bits"),
        ("argmin_mode", ""),
        ("max_entropy_mean", "bits"),
        ("max_entropy_stderr", "bits"),
    ]);
    let mut table = Table::new(scenario.name(), &cols);
    let singles = single_party_cuts(&series[0]);
    for &c in &singles {
        let name = series[0].cuts[c].cut.to_string();
        table.add_column(format!("entropy_{name}_mean"), "bits");
        table.add_column(format!("entropy_{name}_stderr"), "bits");
    }
    table
        .notes
        .push("qubit order ABC, A is the most significant bit of the basis index".into());

    let mut summary = Table::new(
        format!("{}-summary", scenario.name()),
        &[
            ("point", ""),
            ("gamma_b", "rate"),
            ("n_trajectories", ""),
            ("peak_time", time_unit(first)),
            ("peak_cu_mean", "bits"),
            ("peak_cu_stderr", "bits"),
            ("entropy_b_c_crossing_time", time_unit(first)),
        ],
    );

    for (p, s) in points.iter().zip(&series) {
        for k in 0..s.times.len() {
            let mut row = point_cells(p.index, &p.params);
            row.extend([
                Cell::Float(s.times[k]),
                Cell::Float(s.mean[k]),
                Cell::Float(s.stderr[k]),
                Cell::Float(s.min_of_means[k]),
                Cell::Text(argmin_label(&s.argmin_mode[k])),
                Cell::Float(s.max_mean[k]),
                Cell::Float(s.max_stderr[k]),
            ]);
            for &c in &singles {
                row.push(Cell::Float(s.cuts[c].mean[k]));
                row.push(Cell::Float(s.cuts[c].stderr[k]));
            }
            table.push(row);
        }
        let peak = (0..s.times.len())
            .max_by(|&a, &b| s.mean[a].total_cmp(&s.mean[b]))
            .unwrap_or(0);
        let find = |label: &str| {
            singles
                .iter()
                .copied()
                .find(|&c| s.cuts[c].cut.to_string() == label)
        };
        let crossing = match (find("B"), find("C")) {
            (Some(b), Some(c)) => crossing_time(&s.times, &s.cuts[b].mean, &s.cuts[c].mean),
            _ => None,
        };
        let mut row = point_cells(p.index, &p.params);
        row.extend([
            s.n_trajectories.into(),
            Cell::Float(s.times[peak]),
            Cell::Float(s.mean[peak]),
            Cell::Float(s.stderr[peak]),
            Cell::Float(crossing.unwrap_or(f64::NAN)),
        ]);
        summary.push(row);
        out.trajectory_counts.push(s.n_trajectories);
    }
    out.tables.push(table);
    out.tables.push(summary);
    Ok(())
}

fn lmg_sweep(
    scenario: Scenario,
    stride: usize,
    points: &[Point],
    out: &mut ScenarioOutput,
) -> Result<(), CliError> {
    let results = points
        .par_iter()
        .map(|p| -> Result<_, CliError> {
            let spec: LindbladSpec = p.spec()?;
            let psi0 = p.params.initial_state()?;
            let ensemble = sample_cut_entropies(&psi0, &spec, &p.trajectory)?;
            Ok((ensemble.series(), steady_state(&ensemble, stride)))
        })
        .collect::<Vec<_>>();

    let first = &points[0].params;
    let mut cols = point_columns(first);
    cols.extend([
        ("time", time_unit(first)),
        ("cu_mean", "bits"),
        ("cu_stderr", "bits"),
        ("min_of_means", "bits"),
        ("argmin_mode", "spins"),
        ("max_entropy_mean", "bits"),
        ("max_entropy_stderr", "bits"),
    ]);
    let mut table = Table::new(scenario.name(), &cols);
    let mut scols = point_columns(first);
    scols.extend([
        ("n_trajectories", ""),
        ("window_samples", ""),
        ("cu_mean", "bits"),
        ("cu_stderr", "bits"),
        ("max_entropy_mean", "bits"),
        ("max_entropy_stderr", "bits"),
        ("first_half_mean", "bits"),
        ("second_half_mean", "bits"),
        ("drift_sigma", ""),
        ("stationary", ""),
        ("mean_jumps", ""),
    ]);
    let mut summary = Table::new(format!("{}-summary", scenario.name()), &scols);
    summary.notes.push(format!(
        "steady state: per-trajectory averages over recorded samples at t >= burn_in; stationary means first/second half differ by < {} combined standard errors",
        crate::steady::STATIONARITY_SIGMA
    ));

    for (p, r) in points.iter().zip(results) {
        let (s, ss) = r?;
        for k in 0..s.times.len() {
            let mut row = point_cells(p.index, &p.params);
            row.extend([
                Cell::Float(s.times[k]),
                Cell::Float(s.mean[k]),
                Cell::Float(s.stderr[k]),
                Cell::Float(s.min_of_means[k]),
                Cell::Text(argmin_label(&s.argmin_mode[k])),
                Cell::Float(s.max_mean[k]),
                Cell::Float(s.max_stderr[k]),
            ]);
            table.push(row);
        }
        let stationary = match ss.stationary() {
            Some(b) => Cell::Bool(b),
            None => Cell::from("undetermined"),
        };
        if ss.stationary() == Some(false) {
            out.warnings.push(format!(
                "point {}: steady-state window drifts by {:.2} standard errors; increase burn_in",
                p.index, ss.drift_sigma
            ));
        }
        let mut row = point_cells(p.index, &p.params);
        row.extend([
            ss.n_trajectories.into(),
            ss.window_samples.into(),
            Cell::Float(ss.mean),
            Cell::Float(ss.stderr),
            Cell::Float(ss.max_mean),
            Cell::Float(ss.max_stderr),
            Cell::Float(ss.first_half_mean),
            Cell::Float(ss.second_half_mean),
            Cell::Float(ss.drift_sigma),
            stationary,
            Cell::Float(ss.mean_jumps),
        ]);
        summary.push(row);
        out.trajectory_counts.push(ss.n_trajectories);
    }
    out.tables.push(table);
    out.tables.push(summary);
    Ok(())
}

/// Largest deviation from 1 of `Σ_k c_k²` over all Schmidt rows of size `n`.
fn schmidt_error(n: usize) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for m in 0..=n {
        for n1 in 1..n {
            let row = schmidt_row(m, n, n1)?;
            let s: f64 = row.coefficients.iter().map(|x| x * x).sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    Ok(worst)
}

pub const DICKE_ENTROPY_TOLERANCE: f64 = 1e-10;
pub const SCHMIDT_TOLERANCE: f64 = 1e-12;

fn dicke_validate(
    max_n: usize,
    schmidt_max_n: usize,
    out: &mut ScenarioOutput,
) -> Result<(), CliError> {
    let mut table = Table::new(
        "dicke-validate",
        &[
            ("n", ""),
            ("m", ""),
            ("n1", ""),
            ("dicke_entropy", "bits"),
            ("register_entropy", "bits"),
            ("abs_diff", "bits"),
        ],
    );
    let cases: Vec<(usize, usize, usize)> = (2..=max_n)
        .flat_map(|n| (0..=n).flat_map(move |m| (1..n).map(move |n1| (n, m, n1))))
        .collect();
    let rows = cases
        .par_iter()
        .map(|&(n, m, n1)| -> Result<_, CliError> {
            let fast = von_neumann_entropy(&dicke_reduced_state(&dicke_state(m, n)?, n1)?)?;
            // the Dicke reduction keeps the last N − N1 qubits
            let keep: Vec<usize> = (n1..n).collect();
            let cut = Bipartition::parties_subset(n, &keep)?;
            let brute = von_neumann_entropy(&dicke_to_register(m, n)?.partial_trace(&cut)?)?;
            Ok((fast, brute))
        })
        .collect::<Vec<_>>();
    let mut worst = 0.0f64;
    for (&(n, m, n1), r) in cases.iter().zip(rows) {
        let (fast, brute) = r?;
        let diff = (fast - brute).abs();
        worst = worst.max(diff);
        table.push(vec![
            n.into(),
            m.into(),
            n1.into(),
            fast.into(),
            brute.into(),
            diff.into(),
        ]);
    }
    if worst > DICKE_ENTROPY_TOLERANCE {
        out.warnings.push(format!(
            "Dicke entropies deviate from brute force by {worst:.3e} (tolerance {DICKE_ENTROPY_TOLERANCE:e})"
        ));
    }

    let mut schmidt = Table::new("schmidt-normalization", &[("n", ""), ("max_abs_error", "")]);
    let errors = (2..=schmidt_max_n)
        .into_par_iter()
        .map(schmidt_error)
        .collect::<Vec<_>>();
    for (n, e) in (2..=schmidt_max_n).zip(errors) {
        let e = e?;
        if e > SCHMIDT_TOLERANCE {
            out.warnings.push(format!(
                "Schmidt coefficients for N = {n} miss normalization by {e:.3e}"
            ));
        }
        schmidt.push(vec![n.into(), e.into()]);
    }
    out.tables.push(table);
    out.tables.push(schmidt);
    Ok(())
}
