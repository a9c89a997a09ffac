use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{normalize_in_place, NoJumpUpdate, Scratch, TrajectoryRng, Unraveling};
use crate::error::{Error, Result};
use crate::lindblad::{effective_hamiltonian, LindbladSpec};
use crate::state::StateVector;
use crate::C64;

/// Largest total jump probability `Σ_i p_i` allowed in one step.
pub const JUMP_STEP_GUARD: f64 = 0.1;

/// First-order Monte Carlo wave function step.
///
/// Channel `i` fires with probability `p_i = <ψ|J_i†J_i|ψ> dt` and maps
/// `ψ → J_iψ/‖J_iψ‖`; otherwise the state is propagated with the no-jump
/// map selected by [`NoJumpUpdate`] and renormalized. The map is computed once.
#[derive(Clone, Debug)]
pub struct JumpStepper {
    dt: f64,
    no_jump: DMatrix<C64>,
    jumps: Vec<DMatrix<C64>>,
}

impl JumpStepper {
    pub fn new(spec: &LindbladSpec, dt: f64) -> Result<Self> {
        Self::with_update(spec, dt, NoJumpUpdate::default())
    }

    pub fn with_update(spec: &LindbladSpec, dt: f64, update: NoJumpUpdate) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let generator = effective_hamiltonian(spec) * C64::new(0.0, -dt);
        let no_jump = match update {
            NoJumpUpdate::Exponential => generator.exp(),
            NoJumpUpdate::FirstOrder => {
                let n = generator.nrows();
                DMatrix::identity(n, n) + generator
            }
        };
        Ok(JumpStepper {
            dt,
            no_jump,
            jumps: spec.jumps().to_vec(),
        })
    }

    /// The non-Hermitian no-jump map applied before renormalization.
    pub fn no_jump_propagator(&self) -> &DMatrix<C64> {
        &self.no_jump
    }
}

impl Unraveling for JumpStepper {
    fn dim(&self) -> usize {
        self.no_jump.nrows()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn scratch(&self) -> Scratch {
        Scratch::new(self.dim(), self.jumps.len())
    }

    fn step(
        &self,
        psi: &mut DVector<C64>,
        scratch: &mut Scratch,
        rng: &mut TrajectoryRng,
    ) -> Result<Option<usize>> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mut total = 0.0;
        for (j, out) in self.jumps.iter().zip(scratch.jumped.iter_mut()) {
            out.gemv(one, j, psi, zero);
            total += out.norm_squared() * self.dt;
        }
        if total > JUMP_STEP_GUARD {
            return Err(Error::StepGuard {
                quantity: "sum of jump probabilities",
                value: total,
                limit: JUMP_STEP_GUARD,
            });
        }
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        for (index, jumped) in scratch.jumped.iter_mut().take(self.jumps.len()).enumerate() {
            cumulative += jumped.norm_squared() * self.dt;
            if u < cumulative {
                if !normalize_in_place(jumped) {
                    return Err(Error::ZeroNormJump { index });
                }
                std::mem::swap(psi, jumped);
                return Ok(Some(index));
            }
        }
        scratch.buf.gemv(one, &self.no_jump, psi, zero);
        if !normalize_in_place(&mut scratch.buf) {
            return Err(Error::NonFinite { step: 0 });
        }
        std::mem::swap(psi, &mut scratch.buf);
        Ok(None)
    }
}

/// Single jump step with a freshly built propagator; convenient for tests and
/// one-off use. Prefer [`JumpStepper`] in loops.
pub fn jump_step(
    psi: &StateVector,
    spec: &LindbladSpec,
    dt: f64,
    rng: &mut TrajectoryRng,
) -> Result<(StateVector, Option<usize>)> {
    if (psi.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("state is not normalized".into()));
    }
    let stepper = JumpStepper::new(spec, dt)?;
    let mut scratch = stepper.scratch();
    let mut out = psi.clone();
    let jump = stepper.step(out.amplitudes_mut(), &mut scratch, rng)?;
    Ok((out, jump))
}
