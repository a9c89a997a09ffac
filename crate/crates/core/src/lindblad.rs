//! Lindblad master equations: model description, unraveling freedom, the effective
//! non-Hermitian Hamiltonian and a reference RK4 density-matrix integrator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::DensityOperator;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Largest `dt · ‖J†J‖` accepted by [`integrate_master`].
pub const MASTER_STEP_GUARD: f64 = 0.05;

/// Hamiltonian plus jump operators, `ħ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladSpec {
    hamiltonian: DMatrix<C64>,
    jumps: Vec<DMatrix<C64>>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: DMatrix<C64>, jumps: Vec<DMatrix<C64>>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if !hamiltonian.is_square() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: hamiltonian.ncols(),
            });
        }
        for j in &jumps {
            if j.nrows() != dim || j.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: j.nrows().max(j.ncols()),
                });
            }
        }
        let deviation = (&hamiltonian - hamiltonian.adjoint()).camax();
        if deviation > 1e-10 {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(LindbladSpec { hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &DMatrix<C64> {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[DMatrix<C64>] {
        &self.jumps
    }

    /// `max_i ‖J_i† J_i‖`, the fastest single-channel jump rate.
    pub fn max_jump_rate(&self) -> f64 {
        self.jumps
            .iter()
            .map(|j| spectral_norm_psd(&(j.adjoint() * j)))
            .fold(0.0, f64::max)
    }
}

/// Largest eigenvalue of a positive semidefinite Hermitian matrix.
pub fn spectral_norm_psd(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// `J_i → G_i = Σ_j u_ij J_j + α_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnravelingTransform {
    u: DMatrix<C64>,
    alpha: Vec<C64>,
}

impl UnravelingTransform {
    pub fn new(u: DMatrix<C64>, alpha: Vec<C64>) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                found: u.ncols(),
            });
        }
        if alpha.len() != u.nrows() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                found: alpha.len(),
            });
        }
        let n = u.nrows();
        let deviation = (u.adjoint() * &u - DMatrix::<C64>::identity(n, n)).camax();
        if deviation > 1e-8 {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(UnravelingTransform { u, alpha })
    }

    pub fn identity(n: usize) -> Self {
        UnravelingTransform {
            u: DMatrix::identity(n, n),
            alpha: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn unitary(u: DMatrix<C64>) -> Result<Self> {
        let n = u.nrows();
        Self::new(u, vec![C64::new(0.0, 0.0); n])
    }

    pub fn u(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }
}

fn check_square(expected: usize, m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != expected || m.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

/// `D[O]ρ = OρO† − ½O†Oρ − ½ρO†O`.
pub fn dissipator(o: &DMatrix<C64>, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_square(o.nrows(), o)?;
    check_square(o.nrows(), rho)?;
    let od = o.adjoint();
    let odo = &od * o;
    Ok(o * rho * &od - (&odo * rho + rho * &odo).unscale(2.0))
}

/// `−i[H,ρ] + Σ_i D[J_i]ρ`.
pub fn liouvillian_apply(spec: &LindbladSpec, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_square(spec.dim(), rho)?;
    let h = spec.hamiltonian();
    let mut out = (h * rho - rho * h) * (-I);
    for j in spec.jumps() {
        out += dissipator(j, rho)?;
    }
    Ok(out)
}

/// `H − (i/2) Σ_i J_i† J_i`.
pub fn effective_hamiltonian(spec: &LindbladSpec) -> DMatrix<C64> {
    let mut h = spec.hamiltonian().clone();
    for j in spec.jumps() {
        h -= (j.adjoint() * j) * (I * 0.5);
    }
    h
}

/// The Liouvillian as a `dim² × dim²` matrix acting on column-stacked `vec(ρ)`.
pub fn liouvillian_superoperator(spec: &LindbladSpec) -> DMatrix<C64> {
    let d = spec.dim();
    let id = DMatrix::<C64>::identity(d, d);
    let h = spec.hamiltonian();
    // vec(AXB) = (Bᵀ ⊗ A) vec(X)
    let mut sup = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I);
    for j in spec.jumps() {
        let jdj = j.adjoint() * j;
        sup += j.conjugate().kronecker(j);
        sup -= id.kronecker(&jdj).unscale(2.0);
        sup -= jdj.transpose().kronecker(&id).unscale(2.0);
    }
    sup
}

/// Re-expresses the master equation with jumps `G_i = Σ_j u_ij J_j + α_i` and
/// Hamiltonian `H + (1/2i) Σ_i (α_i* K_i − α_i K_i†)`, where `K_i = Σ_j u_ij J_j`.
/// The Liouvillian is unchanged.
pub fn apply_unraveling(spec: &LindbladSpec, t: &UnravelingTransform) -> Result<LindbladSpec> {
    let n = spec.jumps().len();
    if t.u().nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: t.u().nrows(),
        });
    }
    let d = spec.dim();
    let id = DMatrix::<C64>::identity(d, d);
    let mut hamiltonian = spec.hamiltonian().clone();
    let mut jumps = Vec::with_capacity(n);
    for (i, &alpha) in t.alpha().iter().enumerate() {
        let mut k = DMatrix::<C64>::zeros(d, d);
        for (j, op) in spec.jumps().iter().enumerate() {
            k += op * t.u()[(i, j)];
        }
        // 1/(2i) = −i/2
        hamiltonian += (&k * alpha.conj() - k.adjoint() * alpha) * C64::new(0.0, -0.5);
        jumps.push(k + &id * alpha);
    }
    // restore exact Hermiticity lost to rounding in the correction
    let hamiltonian = (&hamiltonian + hamiltonian.adjoint()).unscale(2.0);
    LindbladSpec::new(hamiltonian, jumps)
}

/// Density-matrix time series from [`integrate_master`].
#[derive(Clone, Debug)]
pub struct MasterSolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
}

impl MasterSolution {
    /// State recorded closest to `t`.
    pub fn at(&self, t: f64) -> &DensityOperator {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        &self.states[idx]
    }
}

/// Number of `dt` steps spanning `[0, t_final]`; `t_final` must be a multiple
/// of `dt` up to rounding.
pub(crate) fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "t_final must be nonnegative, got {t_final}"
        )));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "t_final {t_final} is not a multiple of dt {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Classical RK4 on the Liouvillian. Every step is re-Hermitized and
/// trace-renormalized; states are recorded every `stride` steps (including
/// `t = 0`).
pub fn integrate_master(
    spec: &LindbladSpec,
    rho0: &DensityOperator,
    dt: f64,
    t_final: f64,
    stride: usize,
) -> Result<MasterSolution> {
    check_square(spec.dim(), rho0.matrix())?;
    let steps = step_count(dt, t_final)?;
    let guard = dt * spec.max_jump_rate();
    if guard > MASTER_STEP_GUARD {
        return Err(Error::StepGuard {
            quantity: "dt * max ||J^dag J||",
            value: guard,
            limit: MASTER_STEP_GUARD,
        });
    }
    let stride = stride.max(1);

    let heff = effective_hamiltonian(spec);
    let heff_adj = heff.adjoint();
    let jumps: Vec<(DMatrix<C64>, DMatrix<C64>)> = spec
        .jumps()
        .iter()
        .map(|j| (j.clone(), j.adjoint()))
        .collect();
    let rhs = |rho: &DMatrix<C64>| -> DMatrix<C64> {
        let mut out = (&heff * rho - rho * &heff_adj) * (-I);
        for (j, jd) in &jumps {
            out += j * rho * jd;
        }
        out
    };

    let mut rho = rho0.matrix().clone();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    for step in 1..=steps {
        let k1 = rhs(&rho);
        let k2 = rhs(&(&rho + k1.scale(0.5 * dt)));
        let k3 = rhs(&(&rho + k2.scale(0.5 * dt)));
        let k4 = rhs(&(&rho + k3.scale(dt)));
        rho += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
        rho = (&rho + rho.adjoint()).unscale(2.0);
        let tr = rho.trace().re;
        rho.unscale_mut(tr);
        if step % stride == 0 {
            times.push(step as f64 * dt);
            states.push(DensityOperator::from_matrix_unchecked(rho.clone()));
        }
    }
    Ok(MasterSolution { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{Basis, StateVector};
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn lowering(gamma: f64) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = c(gamma.sqrt());
        m
    }

    fn excited() -> DensityOperator {
        StateVector::basis_state(Basis::QubitRegister(1), 1)
            .unwrap()
            .projector()
    }

    #[test]
    fn dissipator_examples() {
        let gamma = 0.7;
        let d = dissipator(&lowering(gamma), excited().matrix()).unwrap();
        assert_abs_diff_eq!(d[(0, 0)].re, gamma, epsilon = 1e-14);
        assert_abs_diff_eq!(d[(1, 1)].re, -gamma, epsilon = 1e-14);
        assert_abs_diff_eq!(d.trace().norm(), 0.0, epsilon = 1e-14);

        let any = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.3), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.7)],
        );
        let d = dissipator(&DMatrix::identity(2, 2), &any).unwrap();
        assert_abs_diff_eq!(d.camax(), 0.0, epsilon = 1e-15);

        let plus = DMatrix::from_element(2, 2, c(0.5));
        let d = dissipator(&lowering(gamma), &plus).unwrap();
        // coherences decay at γ/2: d/dt ρ01 = −(γ/2) ρ01
        assert_abs_diff_eq!(d[(0, 1)].re, -gamma / 2.0 * 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(d[(1, 0)].re, -gamma / 2.0 * 0.5, epsilon = 1e-14);

        assert!(dissipator(&lowering(1.0), &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn liouvillian_limits() {
        let rho = excited();
        let empty = LindbladSpec::new(DMatrix::zeros(2, 2), vec![]).unwrap();
        assert_abs_diff_eq!(
            liouvillian_apply(&empty, rho.matrix()).unwrap().camax(),
            0.0
        );

        let h = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let closed = LindbladSpec::new(h.clone(), vec![]).unwrap();
        let got = liouvillian_apply(&closed, rho.matrix()).unwrap();
        let want = (&h * rho.matrix() - rho.matrix() * &h) * (-I);
        assert_abs_diff_eq!((got - want).camax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_hamiltonian_examples() {
        let gamma = 0.4;
        let spec = LindbladSpec::new(DMatrix::zeros(2, 2), vec![lowering(gamma)]).unwrap();
        let heff = effective_hamiltonian(&spec);
        assert_abs_diff_eq!(heff[(1, 1)].im, -gamma / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(heff[(0, 0)].norm(), 0.0);

        let h = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0), C64::new(0.5, 0.5), C64::new(0.5, -0.5), c(-1.0)],
        );
        let spec = LindbladSpec::new(h.clone(), vec![lowering(gamma), lowering(0.1) * I]).unwrap();
        let heff = effective_hamiltonian(&spec);
        let herm = (&heff + heff.adjoint()).unscale(2.0);
        assert_abs_diff_eq!((herm - h).camax(), 0.0, epsilon = 1e-15);
        let anti = (&heff - heff.adjoint()) * C64::new(0.0, -0.5);
        assert!(crate::state::hermitian_eigenvalues(&anti)
            .iter()
            .all(|v| *v <= 1e-15));
    }

    #[test]
    fn rejects_non_hermitian_and_non_unitary() {
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(
            LindbladSpec::new(h, vec![]),
            Err(Error::NotHermitian { .. })
        ));
        let u = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(
            UnravelingTransform::unitary(u),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn identity_and_phase_unravelings() {
        let spec =
            LindbladSpec::new(DMatrix::zeros(2, 2), vec![lowering(1.0), lowering(0.3)]).unwrap();
        let same = apply_unraveling(&spec, &UnravelingTransform::identity(2)).unwrap();
        assert_eq!(same.jumps(), spec.jumps());

        let phase = C64::from_polar(1.0, 0.8);
        let u = DMatrix::<C64>::identity(2, 2) * phase;
        let rephased = apply_unraveling(&spec, &UnravelingTransform::unitary(u).unwrap()).unwrap();
        assert_abs_diff_eq!(
            (&rephased.jumps()[0] - &spec.jumps()[0] * phase).camax(),
            0.0,
            epsilon = 1e-15
        );
        let diff = liouvillian_superoperator(&spec) - liouvillian_superoperator(&rephased);
        assert!(diff.camax() < 1e-14);
    }

    #[test]
    fn unraveling_with_offsets_keeps_liouvillian() {
        let spec = LindbladSpec::new(
            DMatrix::from_row_slice(2, 2, &[c(0.2), c(0.1), c(0.1), c(-0.4)]),
            vec![lowering(1.0), lowering(0.5).transpose()],
        )
        .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = DMatrix::from_row_slice(2, 2, &[c(s), I * s, I * s, c(s)]);
        let t =
            UnravelingTransform::new(u, vec![C64::new(0.3, -0.7), C64::new(-1.1, 0.2)]).unwrap();
        let out = apply_unraveling(&spec, &t).unwrap();
        let diff = liouvillian_superoperator(&spec) - liouvillian_superoperator(&out);
        assert!(diff.camax() < 1e-12, "{}", diff.camax());
    }

    #[test]
    fn superoperator_matches_direct_application() {
        let spec = LindbladSpec::new(
            DMatrix::from_row_slice(
                2,
                2,
                &[c(0.5), C64::new(0.0, 0.3), C64::new(0.0, -0.3), c(-0.5)],
            ),
            vec![lowering(0.8)],
        )
        .unwrap();
        let rho = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.6), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.4)],
        );
        let direct = liouvillian_apply(&spec, &rho).unwrap();
        let vec_rho = DMatrix::from_column_slice(4, 1, rho.as_slice());
        let via_sup = liouvillian_superoperator(&spec) * vec_rho;
        for k in 0..4 {
            assert_abs_diff_eq!(
                (direct.as_slice()[k] - via_sup[k]).norm(),
                0.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn decay_integrates_to_exponential() {
        let gamma = 1.0;
        let spec = LindbladSpec::new(DMatrix::zeros(2, 2), vec![lowering(gamma)]).unwrap();
        let sol = integrate_master(&spec, &excited(), 1e-3, 1.0, 1000).unwrap();
        let p = sol.states.last().unwrap().matrix()[(1, 1)].re;
        assert_abs_diff_eq!(p, (-1.0f64).exp(), epsilon = 1e-8);
        assert_eq!(sol.times, vec![0.0, 1.0]);
    }

    #[test]
    fn closed_qubit_phases_rotate() {
        let sz = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let spec = LindbladSpec::new(sz, vec![]).unwrap();
        let plus = StateVector::from_slice(Basis::QubitRegister(1), &[c(1.0), c(1.0)])
            .unwrap()
            .projector();
        let t = 0.75;
        let sol = integrate_master(&spec, &plus, 1e-3, t, 750).unwrap();
        let rho01 = sol.states.last().unwrap().matrix()[(0, 1)];
        let want = C64::from_polar(0.5, -2.0 * t);
        assert_abs_diff_eq!((rho01 - want).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn step_guard_is_enforced() {
        let spec = LindbladSpec::new(DMatrix::zeros(2, 2), vec![lowering(10.0)]).unwrap();
        assert!(matches!(
            integrate_master(&spec, &excited(), 0.01, 1.0, 1),
            Err(Error::StepGuard { .. })
        ));
        assert!(integrate_master(&spec, &excited(), 0.003, 0.01, 1).is_err());
    }
}
