use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{normalize_in_place, Scratch, TrajectoryRng, Unraveling};
use crate::error::{Error, Result};
use crate::lindblad::{spectral_norm_psd, LindbladSpec};
use crate::state::StateVector;
use crate::C64;

/// Largest `dt · ‖L†L‖` accepted by [`HomodyneStepper`].
pub const HOMODYNE_STEP_GUARD: f64 = 0.1;

/// Homodyne (diffusive) unraveling of a single-channel master equation.
///
/// For jump operator `J` and detection angle `θ` the measured channel is
/// `L = e^{−iθ} J` with current `x = <L + L†>`. Each step first applies the
/// unitary `exp(−iH dt)` and then the Euler–Maruyama update
///
/// ```text
/// dψ = [−½L†L + ½x L − ⅛x²] ψ dt + [L − ½x] ψ dW,   dW ~ N(0, dt)
/// ```
///
/// followed by renormalization.
///
/// With `J = √(Γ/N) J_+` the measured quadrature is proportional to
/// `e^{−iθ}J_+ + e^{iθ}J_−`, i.e. the spin quadrature at angle `−θ`; the two
/// sign conventions give statistically identical entropies because the model
/// is invariant under complex conjugation in the Dicke basis.
#[derive(Clone, Debug)]
pub struct HomodyneStepper {
    dt: f64,
    unitary: DMatrix<C64>,
    l: DMatrix<C64>,
    ldl: DMatrix<C64>,
}

impl HomodyneStepper {
    pub fn new(spec: &LindbladSpec, theta: f64, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if spec.jumps().len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "homodyne unraveling needs exactly one jump operator, got {}",
                spec.jumps().len()
            )));
        }
        let l = &spec.jumps()[0] * C64::from_polar(1.0, -theta);
        let ldl = l.adjoint() * &l;
        let guard = dt * spectral_norm_psd(&ldl);
        if guard > HOMODYNE_STEP_GUARD {
            return Err(Error::StepGuard {
                quantity: "dt * ||L^dag L||",
                value: guard,
                limit: HOMODYNE_STEP_GUARD,
            });
        }
        let unitary = (spec.hamiltonian() * C64::new(0.0, -dt)).exp();
        Ok(HomodyneStepper {
            dt,
            unitary,
            l,
            ldl,
        })
    }

    /// The measured channel `L = e^{−iθ} J`.
    pub fn measured_operator(&self) -> &DMatrix<C64> {
        &self.l
    }

    /// Unnormalized Euler–Maruyama increment `ψ + dψ` of the dissipative part
    /// for a given Wiener increment (no Hamiltonian, no renormalization).
    pub fn increment(&self, psi: &DVector<C64>, dw: f64) -> DVector<C64> {
        let lpsi = &self.l * psi;
        let ldlpsi = &self.ldl * psi;
        let x = 2.0 * psi.dotc(&lpsi).re;
        self.combine(psi, &lpsi, &ldlpsi, x, dw)
    }

    fn combine(
        &self,
        psi: &DVector<C64>,
        lpsi: &DVector<C64>,
        ldlpsi: &DVector<C64>,
        x: f64,
        dw: f64,
    ) -> DVector<C64> {
        let dt = self.dt;
        let mut out = psi * C64::new(1.0 - 0.125 * x * x * dt - 0.5 * x * dw, 0.0);
        out.axpy(C64::new(-0.5 * dt, 0.0), ldlpsi, C64::new(1.0, 0.0));
        out.axpy(C64::new(0.5 * x * dt + dw, 0.0), lpsi, C64::new(1.0, 0.0));
        out
    }
}

impl Unraveling for HomodyneStepper {
    fn dim(&self) -> usize {
        self.unitary.nrows()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn scratch(&self) -> Scratch {
        Scratch::new(self.dim(), 2)
    }

    fn step(
        &self,
        psi: &mut DVector<C64>,
        scratch: &mut Scratch,
        rng: &mut TrajectoryRng,
    ) -> Result<Option<usize>> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let dw = self.dt.sqrt() * rng.sample::<f64, _>(StandardNormal);

        scratch.buf.gemv(one, &self.unitary, psi, zero);
        let (lpsi, rest) = scratch.jumped.split_at_mut(1);
        let (lpsi, ldlpsi) = (&mut lpsi[0], &mut rest[0]);
        lpsi.gemv(one, &self.l, &scratch.buf, zero);
        ldlpsi.gemv(one, &self.ldl, &scratch.buf, zero);
        let x = 2.0 * scratch.buf.dotc(lpsi).re;

        let dt = self.dt;
        psi.copy_from(&scratch.buf);
        psi.scale_mut(1.0 - 0.125 * x * x * dt - 0.5 * x * dw);
        psi.axpy(C64::new(-0.5 * dt, 0.0), ldlpsi, one);
        psi.axpy(C64::new(0.5 * x * dt + dw, 0.0), lpsi, one);
        if !psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || !normalize_in_place(psi) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(None)
    }
}

/// Single homodyne step; prefer [`HomodyneStepper`] in loops.
pub fn diffusive_step(
    psi: &StateVector,
    spec: &LindbladSpec,
    theta: f64,
    dt: f64,
    rng: &mut TrajectoryRng,
) -> Result<StateVector> {
    let stepper = HomodyneStepper::new(spec, theta, dt)?;
    let mut scratch = stepper.scratch();
    let mut out = psi.clone();
    stepper.step(out.amplitudes_mut(), &mut scratch, rng)?;
    Ok(out)
}
