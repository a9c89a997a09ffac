//! Stochastic unravelings of a Lindblad master equation.
//!
//! Two engines are provided: [`JumpStepper`] (Monte Carlo wave function, one
//! uniform draw per step) and [`HomodyneStepper`] (diffusive homodyne
//! unraveling, one real Wiener increment per step). Every trajectory owns a
//! ChaCha8 stream keyed by `(master_seed, trajectory index)`, so results are
//! independent of scheduling.

mod diffusive;
mod ensemble;
mod jump;

pub use diffusive::{diffusive_step, HomodyneStepper, HOMODYNE_STEP_GUARD};
pub use ensemble::{
    par_map_trajectories, reconstruct_density, run_ensemble, run_records, EnsembleResult,
    Observable, ObservableSeries, RunningStats,
};
pub use jump::{jump_step, JumpStepper, JUMP_STEP_GUARD};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lindblad::{step_count, LindbladSpec};
use crate::state::StateVector;
use crate::C64;

pub type TrajectoryRng = ChaCha8Rng;

/// Independent random stream for trajectory `index` of an ensemble.
pub fn trajectory_rng(master_seed: u64, index: u64) -> TrajectoryRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Jump,
    Diffusive,
}

/// Evolution applied between jumps, before renormalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoJumpUpdate {
    /// `exp(−i H_eff dt)`; exact between jumps for any `dt`.
    #[default]
    Exponential,
    /// `1 − i H_eff dt`; accurate only while `‖H_eff‖ dt ≪ 1`.
    FirstOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub method: Method,
    pub dt: f64,
    pub t_final: f64,
    /// States before this time are not recorded.
    pub burn_in: f64,
    /// Record every `record_stride` steps.
    pub record_stride: usize,
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// Homodyne detection angle in radians (diffusive only).
    pub theta: f64,
    /// Jump method only.
    pub no_jump: NoJumpUpdate,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            method: Method::Jump,
            dt: 1e-3,
            t_final: 1.0,
            burn_in: 0.0,
            record_stride: 1,
            n_trajectories: 1,
            master_seed: 0,
            theta: 0.0,
            no_jump: NoJumpUpdate::Exponential,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        step_count(self.dt, self.t_final)?;
        if !(self.burn_in >= 0.0 && self.burn_in <= self.t_final) {
            return Err(Error::InvalidParameter(format!(
                "burn_in {} must lie in [0, t_final = {}]",
                self.burn_in, self.t_final
            )));
        }
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParameter(
                "n_trajectories must be >= 1".into(),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be >= 1".into()));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter("theta must be finite".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.dt, self.t_final)
    }

    pub fn is_recorded(&self, step: usize) -> bool {
        step.is_multiple_of(self.record_stride)
            && step as f64 * self.dt >= self.burn_in - 1e-12 * self.dt
    }

    /// The recorded time grid.
    pub fn record_times(&self) -> Result<Vec<f64>> {
        let steps = self.steps()?;
        Ok((0..=steps)
            .filter(|&k| self.is_recorded(k))
            .map(|k| k as f64 * self.dt)
            .collect())
    }
}

/// Per-trajectory scratch buffers.
#[derive(Clone, Debug)]
pub struct Scratch {
    pub(crate) buf: DVector<C64>,
    pub(crate) jumped: Vec<DVector<C64>>,
}

impl Scratch {
    fn new(dim: usize, n_jumps: usize) -> Self {
        Scratch {
            buf: DVector::zeros(dim),
            jumped: vec![DVector::zeros(dim); n_jumps.max(2)],
        }
    }
}

/// One step of a stochastic unraveling.
pub trait Unraveling: Sync {
    fn dim(&self) -> usize;

    fn dt(&self) -> f64;

    fn scratch(&self) -> Scratch;

    /// Advances `psi` in place and returns the jump channel if one fired.
    fn step(
        &self,
        psi: &mut DVector<C64>,
        scratch: &mut Scratch,
        rng: &mut TrajectoryRng,
    ) -> Result<Option<usize>>;
}

/// Either engine, selected from a [`TrajectoryConfig`].
#[derive(Clone, Debug)]
pub enum Engine {
    Jump(JumpStepper),
    Diffusive(HomodyneStepper),
}

impl Engine {
    pub fn new(spec: &LindbladSpec, config: &TrajectoryConfig) -> Result<Self> {
        match config.method {
            Method::Jump => {
                JumpStepper::with_update(spec, config.dt, config.no_jump).map(Engine::Jump)
            }
            Method::Diffusive => {
                HomodyneStepper::new(spec, config.theta, config.dt).map(Engine::Diffusive)
            }
        }
    }
}

impl Unraveling for Engine {
    fn dim(&self) -> usize {
        match self {
            Engine::Jump(s) => s.dim(),
            Engine::Diffusive(s) => s.dim(),
        }
    }

    fn dt(&self) -> f64 {
        match self {
            Engine::Jump(s) => s.dt(),
            Engine::Diffusive(s) => s.dt(),
        }
    }

    fn scratch(&self) -> Scratch {
        match self {
            Engine::Jump(s) => s.scratch(),
            Engine::Diffusive(s) => s.scratch(),
        }
    }

    fn step(
        &self,
        psi: &mut DVector<C64>,
        scratch: &mut Scratch,
        rng: &mut TrajectoryRng,
    ) -> Result<Option<usize>> {
        match self {
            Engine::Jump(s) => s.step(psi, scratch, rng),
            Engine::Diffusive(s) => s.step(psi, scratch, rng),
        }
    }
}

/// One stochastic realization `|ψ_j(t)>`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// `(time, channel)` for every jump, in order.
    pub jump_log: Vec<(f64, usize)>,
}

/// Runs trajectory `index`, calling `observe(record_index, t, psi)` at every
/// recorded step. Returns the jump log.
pub fn run_trajectory_with<U, F>(
    psi0: &StateVector,
    engine: &U,
    config: &TrajectoryConfig,
    index: usize,
    mut observe: F,
) -> Result<Vec<(f64, usize)>>
where
    U: Unraveling + ?Sized,
    F: FnMut(usize, f64, &StateVector),
{
    config.validate()?;
    if (engine.dt() - config.dt).abs() > 0.0 {
        return Err(Error::InvalidParameter(
            "engine was built for a different dt".into(),
        ));
    }
    if psi0.dim() != engine.dim() {
        return Err(Error::DimensionMismatch {
            expected: engine.dim(),
            found: psi0.dim(),
        });
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(
            "initial state is not normalized".into(),
        ));
    }
    let steps = config.steps()?;
    let mut rng = trajectory_rng(config.master_seed, index as u64);
    let mut scratch = engine.scratch();
    let mut psi = psi0.clone();
    let mut jump_log = Vec::new();
    let mut recorded = 0usize;
    if config.is_recorded(0) {
        observe(recorded, 0.0, &psi);
        recorded += 1;
    }
    for step in 1..=steps {
        let outcome = engine
            .step(psi.amplitudes_mut(), &mut scratch, &mut rng)
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite { step },
                other => other,
            })?;
        let t = step as f64 * config.dt;
        if let Some(channel) = outcome {
            jump_log.push((t, channel));
        }
        if config.is_recorded(step) {
            observe(recorded, t, &psi);
            recorded += 1;
        }
    }
    Ok(jump_log)
}

fn record_with<U: Unraveling + ?Sized>(
    psi0: &StateVector,
    engine: &U,
    config: &TrajectoryConfig,
    index: usize,
) -> Result<TrajectoryRecord> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let jump_log = run_trajectory_with(psi0, engine, config, index, |_, t, psi| {
        times.push(t);
        states.push(psi.clone());
    })?;
    Ok(TrajectoryRecord {
        times,
        states,
        jump_log,
    })
}

/// Monte Carlo wave function trajectory, deterministic in
/// `(config.master_seed, index)`.
pub fn run_jump_trajectory(
    psi0: &StateVector,
    spec: &LindbladSpec,
    config: &TrajectoryConfig,
    index: usize,
) -> Result<TrajectoryRecord> {
    let engine = JumpStepper::new(spec, config.dt)?;
    record_with(psi0, &engine, config, index)
}

/// Homodyne trajectory at angle `config.theta` for a single-channel spec.
pub fn run_diffusive_trajectory(
    psi0: &StateVector,
    spec: &LindbladSpec,
    config: &TrajectoryConfig,
    index: usize,
) -> Result<TrajectoryRecord> {
    let engine = HomodyneStepper::new(spec, config.theta, config.dt)?;
    record_with(psi0, &engine, config, index)
}

/// Dispatches on `config.method`.
pub fn run_trajectory(
    psi0: &StateVector,
    spec: &LindbladSpec,
    config: &TrajectoryConfig,
    index: usize,
) -> Result<TrajectoryRecord> {
    let engine = Engine::new(spec, config)?;
    record_with(psi0, &engine, config, index)
}

pub(crate) fn normalize_in_place(v: &mut DVector<C64>) -> bool {
    let norm = v.norm();
    if norm > 0.0 && norm.is_finite() {
        v.unscale_mut(norm);
        true
    } else {
        false
    }
}
