//! Experiment configuration: TOML schema, scenario defaults and validation.
//!
//! Every section is optional; omitted keys fall back to scenario-specific
//! defaults. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use gmcorr::lindblad::LindbladSpec;
use gmcorr::models::{
    ghz3, lmg_initial_state, lmg_spec, psi1, psi2, three_qubit_spec, GroundLabel, LmgParams,
    ThreeQubitScenario, ThreeQubitUnraveling,
};
use gmcorr::trajectory::{Engine, Method, NoJumpUpdate, TrajectoryConfig};
use gmcorr::StateVector;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    OracleCheck,
    ThreeQubitEntropyCross,
    ThreeQubitBeamsplitter,
    LmgJumpSweep,
    LmgHomodyneSweep,
    DickeValidate,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::OracleCheck => "oracle-check",
            Scenario::ThreeQubitEntropyCross => "three-qubit-entropy-cross",
            Scenario::ThreeQubitBeamsplitter => "three-qubit-beamsplitter",
            Scenario::LmgJumpSweep => "lmg-jump-sweep",
            Scenario::LmgHomodyneSweep => "lmg-homodyne-sweep",
            Scenario::DickeValidate => "dicke-validate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Jump,
    Diffusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoJumpChoice {
    Exponential,
    FirstOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Psi1,
    Psi2,
    Ghz3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundChoice {
    Zero,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnravelingChoice {
    Direct,
    BeamSplitterAb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleModel {
    ThreeQubit,
    Lmg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub burn_in: Option<f64>,
    pub record_stride: Option<usize>,
    pub n_trajectories: Option<usize>,
    pub master_seed: Option<u64>,
    pub no_jump: Option<NoJumpChoice>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeQubitSection {
    pub gamma_a: Option<f64>,
    pub gamma_c: Option<f64>,
    pub initial: Option<InitialState>,
    pub ground: Option<GroundChoice>,
    pub unraveling: Option<UnravelingChoice>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmgSection {
    pub lambda: Option<f64>,
    pub gamma_b: Option<f64>,
    pub gamma_aniso: Option<f64>,
    pub rate_factor: Option<f64>,
    /// Initial Dicke state `|m, N>`; `m` counts raised spins.
    pub initial_excitations: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub h: Option<Vec<f64>>,
    pub theta_deg: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    /// Absolute `γ_B`; equals `γ_B/γ_A` when `γ_A = 1`.
    pub gamma_b: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyStateSection {
    /// Use every `stride`-th recorded sample of the window.
    pub stride: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub model: Option<OracleModel>,
    pub method: Option<MethodChoice>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DickeSection {
    pub brute_force_max_n: Option<usize>,
    pub schmidt_max_n: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

/// Raw configuration as written by the user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub three_qubit: ThreeQubitSection,
    #[serde(default)]
    pub lmg: LmgSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub steady_state: SteadyStateSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub dicke: DickeSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// One sweep point with its physical model.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum PointParams {
    ThreeQubit {
        gamma_a: f64,
        gamma_b: f64,
        gamma_c: f64,
        unraveling: UnravelingChoice,
        ground: GroundChoice,
        initial: InitialState,
    },
    Lmg {
        n: usize,
        h: f64,
        theta_deg: f64,
        lambda: f64,
        gamma_b: f64,
        gamma_aniso: f64,
        rate_factor: f64,
        initial_excitations: usize,
    },
}

impl PointParams {
    pub fn spec(&self) -> Result<LindbladSpec, gmcorr::Error> {
        match *self {
            PointParams::ThreeQubit {
                gamma_a,
                gamma_b,
                gamma_c,
                unraveling,
                ground,
                ..
            } => three_qubit_spec(&ThreeQubitScenario {
                gamma_a,
                gamma_b,
                gamma_c,
                unraveling: match unraveling {
                    UnravelingChoice::Direct => ThreeQubitUnraveling::Direct,
                    UnravelingChoice::BeamSplitterAb => ThreeQubitUnraveling::BeamSplitterAB,
                },
                ground: match ground {
                    GroundChoice::Zero => GroundLabel::Zero,
                    GroundChoice::One => GroundLabel::One,
                },
            }),
            PointParams::Lmg { .. } => lmg_spec(&self.lmg_params().expect("LMG point")),
        }
    }

    pub fn lmg_params(&self) -> Option<LmgParams> {
        match *self {
            PointParams::Lmg {
                n,
                h,
                lambda,
                gamma_b,
                gamma_aniso,
                rate_factor,
                ..
            } => Some(LmgParams {
                h,
                lambda,
                gamma_aniso,
                gamma_b,
                n,
                rate_factor,
            }),
            PointParams::ThreeQubit { .. } => None,
        }
    }

    pub fn initial_state(&self) -> Result<StateVector, gmcorr::Error> {
        match *self {
            PointParams::ThreeQubit { initial, .. } => Ok(match initial {
                InitialState::Psi1 => psi1(),
                InitialState::Psi2 => psi2(),
                InitialState::Ghz3 => ghz3(),
            }),
            PointParams::Lmg {
                initial_excitations,
                ..
            } => lmg_initial_state(&self.lmg_params().expect("LMG point"), initial_excitations),
        }
    }

    pub fn theta_rad(&self) -> f64 {
        match *self {
            PointParams::Lmg { theta_deg, .. } => theta_deg.to_radians(),
            PointParams::ThreeQubit { .. } => 0.0,
        }
    }
}

/// A sweep point with its own trajectory settings and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub index: usize,
    pub params: PointParams,
    pub trajectory: TrajectoryConfig,
}

impl Point {
    pub fn spec(&self) -> Result<LindbladSpec, gmcorr::Error> {
        self.params.spec()
    }
}

/// Fully defaulted and validated experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    pub method: Option<MethodChoice>,
    pub dt: f64,
    pub t_final: f64,
    pub burn_in: f64,
    pub record_stride: usize,
    /// `None` means the per-N default for LMG scenarios.
    pub n_trajectories: Option<usize>,
    pub master_seed: u64,
    pub no_jump: NoJumpChoice,
    pub steady_state_stride: usize,
    pub brute_force_max_n: usize,
    pub schmidt_max_n: usize,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub points: Vec<PointParams>,
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

struct Defaults {
    dt: f64,
    t_final: f64,
    burn_in: f64,
    record_stride: usize,
    n_trajectories: Option<usize>,
}

const DEFAULT_LMG_BURN_IN: f64 = 50.0;

fn scenario_defaults(scenario: Scenario, model: Option<OracleModel>) -> Defaults {
    match (scenario, model) {
        (Scenario::OracleCheck, Some(OracleModel::Lmg)) => Defaults {
            dt: 1e-3,
            t_final: 5.0,
            burn_in: 0.0,
            record_stride: 1000,
            n_trajectories: Some(2000),
        },
        (Scenario::OracleCheck, _) => Defaults {
            dt: 0.01,
            t_final: 2.0,
            burn_in: 0.0,
            record_stride: 50,
            n_trajectories: Some(2000),
        },
        (Scenario::ThreeQubitEntropyCross | Scenario::ThreeQubitBeamsplitter, _) => Defaults {
            dt: 0.002,
            t_final: 4.0,
            burn_in: 0.0,
            record_stride: 25,
            n_trajectories: Some(2000),
        },
        (Scenario::LmgJumpSweep, _) => Defaults {
            dt: 0.01,
            t_final: 100.0,
            burn_in: DEFAULT_LMG_BURN_IN,
            record_stride: 100,
            n_trajectories: None,
        },
        (Scenario::LmgHomodyneSweep, _) => Defaults {
            dt: 0.005,
            t_final: 100.0,
            burn_in: DEFAULT_LMG_BURN_IN,
            record_stride: 200,
            n_trajectories: None,
        },
        (Scenario::DickeValidate, _) => Defaults {
            dt: 1.0,
            t_final: 0.0,
            burn_in: 0.0,
            record_stride: 1,
            n_trajectories: Some(1),
        },
    }
}

/// Trajectory count used for an LMG point when none is configured.
pub fn default_lmg_trajectories(n: usize) -> usize {
    if n <= 25 {
        500
    } else {
        200
    }
}

fn nonempty<T: Clone>(
    name: &str,
    value: &Option<Vec<T>>,
    default: &[T],
) -> Result<Vec<T>, CliError> {
    match value {
        Some(v) if v.is_empty() => Err(CliError::Config(format!("sweep list `{name}` is empty"))),
        Some(v) => Ok(v.clone()),
        None => Ok(default.to_vec()),
    }
}

fn finite(name: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(CliError::Config(format!(
            "`{name}` contains non-finite value {v}"
        ))),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    /// Applies defaults and overrides, checks every point, and verifies the
    /// output directory is writable. No trajectories are run.
    pub fn resolve(&self, overrides: &Overrides) -> Result<ResolvedConfig, CliError> {
        let scenario = self.scenario;
        let oracle_model = match scenario {
            Scenario::OracleCheck => Some(self.oracle.model.unwrap_or(OracleModel::ThreeQubit)),
            _ => {
                if self.oracle != OracleSection::default() {
                    return Err(CliError::Config(
                        "[oracle] only applies to scenario oracle-check".into(),
                    ));
                }
                None
            }
        };
        let method = match (scenario, oracle_model) {
            (Scenario::OracleCheck, Some(OracleModel::ThreeQubit)) => {
                let m = self.oracle.method.unwrap_or(MethodChoice::Jump);
                if m == MethodChoice::Diffusive {
                    return Err(CliError::Config(
                        "homodyne detection needs a single channel; three-qubit oracle runs use jump".into(),
                    ));
                }
                Some(m)
            }
            (Scenario::OracleCheck, _) => {
                Some(self.oracle.method.unwrap_or(MethodChoice::Diffusive))
            }
            (Scenario::ThreeQubitEntropyCross | Scenario::ThreeQubitBeamsplitter, _)
            | (Scenario::LmgJumpSweep, _) => Some(MethodChoice::Jump),
            (Scenario::LmgHomodyneSweep, _) => Some(MethodChoice::Diffusive),
            (Scenario::DickeValidate, _) => None,
        };

        let d = scenario_defaults(scenario, oracle_model);
        let t = &self.trajectory;
        let dt = t.dt.unwrap_or(d.dt);
        let t_final = t.t_final.unwrap_or(d.t_final);
        let burn_in = t.burn_in.unwrap_or(d.burn_in);
        let record_stride = t.record_stride.unwrap_or(d.record_stride);
        let n_trajectories = t.n_trajectories.or(d.n_trajectories);
        let master_seed = overrides.seed.or(t.master_seed).unwrap_or(0);
        let no_jump = t.no_jump.unwrap_or(NoJumpChoice::Exponential);
        let steady_state_stride = self.steady_state.stride.unwrap_or(1);
        if steady_state_stride == 0 {
            return Err(CliError::Config("steady_state.stride must be >= 1".into()));
        }
        if scenario == Scenario::OracleCheck && burn_in != 0.0 {
            return Err(CliError::Config(
                "oracle-check compares from t = 0; set burn_in = 0".into(),
            ));
        }

        let points = self.points(scenario, oracle_model)?;

        let out_dir = overrides
            .out_dir
            .clone()
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let formats = nonempty(
            "output.formats",
            &self.output.formats,
            &[Format::Csv, Format::Json],
        )?;
        let dicke_max = self.dicke.brute_force_max_n.unwrap_or(8);
        let schmidt_max = self.dicke.schmidt_max_n.unwrap_or(60);
        if scenario == Scenario::DickeValidate {
            if !(2..=12).contains(&dicke_max) {
                return Err(CliError::Config(
                    "dicke.brute_force_max_n must lie in 2..=12".into(),
                ));
            }
            if !(2..=1000).contains(&schmidt_max) {
                return Err(CliError::Config(
                    "dicke.schmidt_max_n must lie in 2..=1000".into(),
                ));
            }
        }

        let resolved = ResolvedConfig {
            scenario,
            method,
            dt,
            t_final,
            burn_in,
            record_stride,
            n_trajectories,
            master_seed,
            no_jump,
            steady_state_stride,
            brute_force_max_n: dicke_max,
            schmidt_max_n: schmidt_max,
            out_dir,
            formats,
            points,
        };
        if method.is_some() {
            for point in resolved.expand_points() {
                point
                    .trajectory
                    .validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let spec = point.spec().map_err(|e| CliError::Config(e.to_string()))?;
                let psi0 = point
                    .params
                    .initial_state()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                if psi0.dim() != spec.dim() {
                    return Err(CliError::Config(
                        "initial state does not match the model".into(),
                    ));
                }
                // builds the propagators, which applies the static step guards
                Engine::new(&spec, &point.trajectory)
                    .map_err(|e| CliError::Config(format!("point {}: {e}", point.index)))?;
            }
        }
        check_writable(&resolved.out_dir)?;
        Ok(resolved)
    }

    fn points(
        &self,
        scenario: Scenario,
        model: Option<OracleModel>,
    ) -> Result<Vec<PointParams>, CliError> {
        let three_qubit = matches!(
            scenario,
            Scenario::ThreeQubitEntropyCross | Scenario::ThreeQubitBeamsplitter
        ) || model == Some(OracleModel::ThreeQubit);
        let lmg = matches!(
            scenario,
            Scenario::LmgJumpSweep | Scenario::LmgHomodyneSweep
        ) || model == Some(OracleModel::Lmg);
        let s = &self.sweep;

        if three_qubit {
            if self.lmg != LmgSection::default()
                || s.h.is_some()
                || s.theta_deg.is_some()
                || s.n.is_some()
            {
                return Err(CliError::Config(
                    "[lmg] and sweep.h/theta_deg/n do not apply to three-qubit runs".into(),
                ));
            }
            let beam = scenario == Scenario::ThreeQubitBeamsplitter;
            let q = &self.three_qubit;
            let gamma_a = q.gamma_a.unwrap_or(if beam { 1.0 } else { 0.0 });
            let gamma_c = q.gamma_c.unwrap_or(if beam { 1.0 } else { 0.0 });
            let default_gb: &[f64] = if beam { &[1.0, 5.0, 10.0] } else { &[1.0] };
            let gammas = nonempty("sweep.gamma_b", &s.gamma_b, default_gb)?;
            finite("sweep.gamma_b", &gammas)?;
            for (name, g) in [
                ("three_qubit.gamma_a", gamma_a),
                ("three_qubit.gamma_c", gamma_c),
            ]
            .into_iter()
            .chain(gammas.iter().map(|&g| ("sweep.gamma_b", g)))
            {
                if !g.is_finite() || g < 0.0 {
                    return Err(CliError::Config(format!("{name} must be >= 0, got {g}")));
                }
            }
            let unraveling = q.unraveling.unwrap_or(if beam {
                UnravelingChoice::BeamSplitterAb
            } else {
                UnravelingChoice::Direct
            });
            let initial = q.initial.unwrap_or(if beam {
                InitialState::Psi2
            } else {
                InitialState::Psi1
            });
            let ground = q.ground.unwrap_or(GroundChoice::One);
            return Ok(gammas
                .into_iter()
                .map(|gamma_b| PointParams::ThreeQubit {
                    gamma_a,
                    gamma_b,
                    gamma_c,
                    unraveling,
                    ground,
                    initial,
                })
                .collect());
        }
        if self.three_qubit != ThreeQubitSection::default() || s.gamma_b.is_some() {
            return Err(CliError::Config(
                "[three_qubit] and sweep.gamma_b only apply to three-qubit runs".into(),
            ));
        }
        if lmg {
            let homodyne = scenario == Scenario::LmgHomodyneSweep
                || (model == Some(OracleModel::Lmg)
                    && self.oracle.method.unwrap_or(MethodChoice::Diffusive)
                        == MethodChoice::Diffusive);
            let (dn, dh, dtheta): (&[usize], &[f64], &[f64]) = match scenario {
                Scenario::OracleCheck => (&[6], &[0.5], &[0.0, 90.0]),
                Scenario::LmgJumpSweep => (
                    &[10],
                    &[-0.5, -0.25, -0.1, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
                    &[0.0],
                ),
                _ => (
                    &[100],
                    &[0.5],
                    &[0.0, 30.0, 60.0, 75.0, 90.0, 105.0, 120.0, 150.0, 180.0],
                ),
            };
            let ns = nonempty("sweep.n", &s.n, dn)?;
            let hs = nonempty("sweep.h", &s.h, dh)?;
            finite("sweep.h", &hs)?;
            let thetas = if homodyne {
                nonempty("sweep.theta_deg", &s.theta_deg, dtheta)?
            } else if s.theta_deg.is_some() {
                return Err(CliError::Config(
                    "sweep.theta_deg only applies to homodyne runs".into(),
                ));
            } else {
                vec![0.0]
            };
            finite("sweep.theta_deg", &thetas)?;
            let l = &self.lmg;
            let lambda = l.lambda.unwrap_or(1.0);
            let gamma_b = l.gamma_b.unwrap_or(0.2);
            let gamma_aniso = l.gamma_aniso.unwrap_or(0.0);
            let rate_factor = l.rate_factor.unwrap_or(1.0);
            let initial_excitations = l.initial_excitations.unwrap_or(0);
            let mut points = Vec::new();
            for &n in &ns {
                if initial_excitations > n {
                    return Err(CliError::Config(format!(
                        "lmg.initial_excitations = {initial_excitations} exceeds N = {n}"
                    )));
                }
                for &h in &hs {
                    for &theta_deg in &thetas {
                        let p = PointParams::Lmg {
                            n,
                            h,
                            theta_deg,
                            lambda,
                            gamma_b,
                            gamma_aniso,
                            rate_factor,
                            initial_excitations,
                        };
                        p.lmg_params()
                            .expect("LMG point")
                            .validate()
                            .map_err(|e| CliError::Config(e.to_string()))?;
                        points.push(p);
                    }
                }
            }
            return Ok(points);
        }
        // dicke-validate carries no model points
        if self.lmg != LmgSection::default() || *s != SweepSection::default() {
            return Err(CliError::Config(
                "dicke-validate is configured through [dicke] only".into(),
            ));
        }
        Ok(Vec::new())
    }
}

impl ResolvedConfig {
    /// Per-point trajectory settings with independent seeds.
    pub fn expand_points(&self) -> Vec<Point> {
        let seeds = crate::seeds::point_seeds(self.master_seed, self.points.len());
        self.points
            .iter()
            .zip(seeds)
            .enumerate()
            .map(|(index, (params, seed))| {
                let n_trajectories = self.n_trajectories.unwrap_or_else(|| match params {
                    PointParams::Lmg { n, .. } => default_lmg_trajectories(*n),
                    PointParams::ThreeQubit { .. } => 2000,
                });
                Point {
                    index,
                    params: params.clone(),
                    trajectory: TrajectoryConfig {
                        method: match self.method {
                            Some(MethodChoice::Diffusive) => Method::Diffusive,
                            _ => Method::Jump,
                        },
                        dt: self.dt,
                        t_final: self.t_final,
                        burn_in: self.burn_in,
                        record_stride: self.record_stride,
                        n_trajectories,
                        master_seed: seed,
                        theta: params.theta_rad(),
                        no_jump: match self.no_jump {
                            NoJumpChoice::Exponential => NoJumpUpdate::Exponential,
                            NoJumpChoice::FirstOrder => NoJumpUpdate::FirstOrder,
                        },
                    },
                }
            })
            .collect()
    }
}

fn check_writable(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".gmcorr-write-probe");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| {
            CliError::Config(format!(
                "output directory {} is not writable: {e}",
                dir.display()
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Result<ResolvedConfig, CliError> {
        let dir = std::env::temp_dir().join("gmcorr-config-tests");
        ExperimentConfig::from_toml(text)?.resolve(&Overrides {
            seed: None,
            out_dir: Some(dir),
        })
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err =
            ExperimentConfig::from_toml("scenario = \"dicke-validate\"\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        let err =
            ExperimentConfig::from_toml("scenario = \"lmg-jump-sweep\"\n[lmg]\nlamda = 1.0\n")
                .unwrap_err();
        assert!(err.to_string().contains("lamda"));
    }

    #[test]
    fn empty_sweeps_are_rejected() {
        let err = resolve("scenario = \"lmg-jump-sweep\"\n[sweep]\nh = []\n").unwrap_err();
        assert!(err.to_string().contains("empty"));
    }

    #[test]
    fn beam_splitter_defaults() {
        let r = resolve("scenario = \"three-qubit-beamsplitter\"\n").unwrap();
        assert_eq!(r.points.len(), 3);
        match &r.points[2] {
            PointParams::ThreeQubit {
                gamma_a,
                gamma_b,
                gamma_c,
                unraveling,
                initial,
                ..
            } => {
                assert_eq!((*gamma_a, *gamma_b, *gamma_c), (1.0, 10.0, 1.0));
                assert_eq!(*unraveling, UnravelingChoice::BeamSplitterAb);
                assert_eq!(*initial, InitialState::Psi2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn homodyne_sweep_expands_in_order_and_converts_degrees() {
        let r = resolve(
            "scenario = \"lmg-homodyne-sweep\"\n[trajectory]\ndt = 0.005\n[sweep]\nn = [4, 6]\nh = [0.5]\ntheta_deg = [0.0, 90.0]\n",
        )
        .unwrap();
        let points = r.expand_points();
        assert_eq!(points.len(), 4);
        assert!((points[1].trajectory.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(points[2].params.lmg_params().unwrap().n, 6);
        assert_eq!(points[0].trajectory.n_trajectories, 500);
        let seeds: std::collections::HashSet<u64> =
            points.iter().map(|p| p.trajectory.master_seed).collect();
        assert_eq!(seeds.len(), 4);
    }

    #[test]
    fn step_guard_violations_are_config_errors() {
        let err = resolve(
            "scenario = \"lmg-homodyne-sweep\"\n[trajectory]\ndt = 0.5\n[sweep]\nn = [20]\ntheta_deg = [0.0]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("guard"), "{err}");
    }

    #[test]
    fn mismatched_sections_are_rejected() {
        assert!(resolve("scenario = \"lmg-jump-sweep\"\n[three_qubit]\ngamma_a = 1.0\n").is_err());
        assert!(resolve("scenario = \"lmg-jump-sweep\"\n[sweep]\ntheta_deg = [0.0]\n").is_err());
        assert!(
            resolve("scenario = \"three-qubit-beamsplitter\"\n[oracle]\nmodel = \"lmg\"\n")
                .is_err()
        );
        assert!(
            resolve("scenario = \"oracle-check\"\n[oracle]\nmethod = \"diffusive\"\n").is_err()
        );
    }

    #[test]
    fn burn_in_beyond_final_time_is_rejected() {
        let err =
            resolve("scenario = \"lmg-jump-sweep\"\n[trajectory]\nburn_in = 200.0\n").unwrap_err();
        assert!(err.to_string().contains("burn_in"));
    }

    #[test]
    fn seed_override_wins() {
        let cfg = ExperimentConfig::from_toml(
            "scenario = \"three-qubit-entropy-cross\"\n[trajectory]\nmaster_seed = 3\n",
        )
        .unwrap();
        let r = cfg
            .resolve(&Overrides {
                seed: Some(11),
                out_dir: Some(std::env::temp_dir().join("gmcorr-config-tests")),
            })
            .unwrap();
        assert_eq!(r.master_seed, 11);
    }
}
