//! Physical systems: three decaying qubits and the dissipative
//! Lipkin-Meshkov-Glick (LMG) collective spin.

use nalgebra::DMatrix;

use crate::dicke::{collective_operator, dicke_state, CollectiveOp};
use crate::error::{Error, Result};
use crate::lindblad::{apply_unraveling, LindbladSpec, UnravelingTransform};
use crate::state::{Basis, StateVector};
use crate::C64;

/// How the three qubits' emission channels are detected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThreeQubitUnraveling {
    /// Separate photodetectors: jumps `√γ_A a`, `√γ_B b`, `√γ_C c`.
    Direct,
    /// Channels A and B mixed on a 50:50 beam splitter before detection.
    BeamSplitterAB,
}

/// Which computational label is each qubit's ground level.
///
/// With [`GroundLabel::One`] the emission operator is `|1><0|`, so `|0>` is
/// excited. This is the labeling under which [`psi2`] carries an excited qubit
/// A whose emission, mixed with B's, builds tripartite correlations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GroundLabel {
    /// Emission `|0><1|`: `|1>` is excited.
    Zero,
    #[default]
    One,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeQubitScenario {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub unraveling: ThreeQubitUnraveling,
    pub ground: GroundLabel,
}

impl ThreeQubitScenario {
    pub fn new(gamma_a: f64, gamma_b: f64, gamma_c: f64, unraveling: ThreeQubitUnraveling) -> Self {
        ThreeQubitScenario {
            gamma_a,
            gamma_b,
            gamma_c,
            unraveling,
            ground: GroundLabel::default(),
        }
    }
}

/// Emission operator on qubit `party` (0 = A, most significant) of a 3-qubit
/// register, mapping the excited label to `ground`.
pub fn lowering_operator(party: usize, ground: GroundLabel) -> DMatrix<C64> {
    assert!(party < 3);
    let bit = 1 << (2 - party);
    let excited_set = ground == GroundLabel::Zero;
    let mut op = DMatrix::zeros(8, 8);
    for x in 0..8usize {
        if (x & bit != 0) == excited_set {
            op[(x ^ bit, x)] = C64::new(1.0, 0.0);
        }
    }
    op
}

/// `(1/√2) [[1, i], [i, 1]] ⊕ [1]`.
pub fn beam_splitter_ab() -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = DMatrix::zeros(3, 3);
    u[(0, 0)] = C64::new(s, 0.0);
    u[(0, 1)] = C64::new(0.0, s);
    u[(1, 0)] = C64::new(0.0, s);
    u[(1, 1)] = C64::new(s, 0.0);
    u[(2, 2)] = C64::new(1.0, 0.0);
    u
}

pub fn three_qubit_spec(s: &ThreeQubitScenario) -> Result<LindbladSpec> {
    for (name, g) in [
        ("gamma_a", s.gamma_a),
        ("gamma_b", s.gamma_b),
        ("gamma_c", s.gamma_c),
    ] {
        if !g.is_finite() || g < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be >= 0, got {g}"
            )));
        }
    }
    let jumps = [s.gamma_a, s.gamma_b, s.gamma_c]
        .iter()
        .enumerate()
        .map(|(p, g)| lowering_operator(p, s.ground) * C64::new(g.sqrt(), 0.0))
        .collect();
    let direct = LindbladSpec::new(DMatrix::zeros(8, 8), jumps)?;
    match s.unraveling {
        ThreeQubitUnraveling::Direct => Ok(direct),
        ThreeQubitUnraveling::BeamSplitterAB => {
            let t = UnravelingTransform::unitary(beam_splitter_ab())?;
            apply_unraveling(&direct, &t)
        }
    }
}

fn three_qubit_state(amplitudes: &[(usize, f64)]) -> StateVector {
    let mut a = vec![C64::new(0.0, 0.0); 8];
    for &(i, v) in amplitudes {
        a[i] = C64::new(v, 0.0);
    }
    StateVector::from_slice(Basis::QubitRegister(3), &a).expect("nonzero literal state")
}

/// `(2|011> + 2|101> + |110>)/3`.
pub fn psi1() -> StateVector {
    three_qubit_state(&[(0b011, 2.0), (0b101, 2.0), (0b110, 1.0)])
}

/// `(|010> + |001>)/√2`.
pub fn psi2() -> StateVector {
    three_qubit_state(&[(0b010, 1.0), (0b001, 1.0)])
}

/// `(|000> + |111>)/√2`.
pub fn ghz3() -> StateVector {
    three_qubit_state(&[(0, 1.0), (0b111, 1.0)])
}

/// Parameters of the dissipative LMG model; rates share one unit (usually λ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmgParams {
    pub h: f64,
    pub lambda: f64,
    pub gamma_aniso: f64,
    /// Collective pumping rate `Γ_b`.
    pub gamma_b: f64,
    pub n: usize,
    /// Multiplies the jump rate: the channel is `√(rate_factor Γ_b/N) J_+`.
    pub rate_factor: f64,
}

impl LmgParams {
    pub fn new(n: usize, h: f64, lambda: f64, gamma_b: f64) -> Self {
        LmgParams {
            h,
            lambda,
            gamma_aniso: 0.0,
            gamma_b,
            n,
            rate_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "LMG needs N >= 2, got {}",
                self.n
            )));
        }
        if !self.gamma_b.is_finite() || self.gamma_b < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Gamma_b must be >= 0, got {}",
                self.gamma_b
            )));
        }
        if !(-1.0..=1.0).contains(&self.gamma_aniso) {
            return Err(Error::InvalidParameter(format!(
                "anisotropy must lie in [-1, 1], got {}",
                self.gamma_aniso
            )));
        }
        if !self.rate_factor.is_finite() || self.rate_factor < 0.0 {
            return Err(Error::InvalidParameter("rate_factor must be >= 0".into()));
        }
        if !self.h.is_finite() || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(
                "h and lambda must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Rate multiplying `D[J_+]`.
    pub fn jump_rate(&self) -> f64 {
        self.rate_factor * self.gamma_b / self.n as f64
    }
}

/// `H = −2h J_z − 2(λ/N)(J_x² + γ J_y²)` on the symmetric sector.
pub fn lmg_hamiltonian(p: &LmgParams) -> Result<DMatrix<C64>> {
    p.validate()?;
    let jx = collective_operator(CollectiveOp::X, p.n)?;
    let jy = collective_operator(CollectiveOp::Y, p.n)?;
    let jz = collective_operator(CollectiveOp::Z, p.n)?;
    let coupling = 2.0 * p.lambda / p.n as f64;
    let h = jz * C64::new(-2.0 * p.h, 0.0)
        - (&jx * &jx + (&jy * &jy) * C64::new(p.gamma_aniso, 0.0)) * C64::new(coupling, 0.0);
    Ok((&h + h.adjoint()).unscale(2.0))
}

/// LMG Hamiltonian with the single collective channel `√(Γ_b/N) J_+`.
pub fn lmg_spec(p: &LmgParams) -> Result<LindbladSpec> {
    let h = lmg_hamiltonian(p)?;
    let jp = collective_operator(CollectiveOp::Raise, p.n)? * C64::new(p.jump_rate().sqrt(), 0.0);
    LindbladSpec::new(h, vec![jp])
}

/// `|m, N>` initial state for LMG runs.
pub fn lmg_initial_state(p: &LmgParams, excitations: usize) -> Result<StateVector> {
    dicke_state(excitations, p.n)
}

/// `X_θ = e^{iθ} J_+ + e^{−iθ} J_−`, so `X_0 = 2J_x` and `X_{π/2} = −2J_y`.
pub fn spin_quadrature(theta: f64, n: usize) -> Result<DMatrix<C64>> {
    let jp = collective_operator(CollectiveOp::Raise, n)?;
    let phase = C64::from_polar(1.0, theta);
    Ok(&jp * phase + jp.adjoint() * phase.conj())
}
