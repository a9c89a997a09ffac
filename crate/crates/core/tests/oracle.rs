use gmcorr::dicke::dicke_state;
use gmcorr::models::{lmg_spec, LmgParams};
use gmcorr::{integrate_master, Basis, DMatrix, DensityOperator, LindbladSpec, StateVector, C64};

/// Decay at rate `gamma` plus precession `H = (omega/2) σ_z` from `|+>`.
fn precessing_decay(gamma: f64, omega: f64) -> (LindbladSpec, DensityOperator) {
    let mut h = DMatrix::zeros(2, 2);
    h[(0, 0)] = C64::new(-omega / 2.0, 0.0);
    h[(1, 1)] = C64::new(omega / 2.0, 0.0);
    let mut a = DMatrix::zeros(2, 2);
    a[(0, 1)] = C64::new(gamma.sqrt(), 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::from_slice(
        Basis::QubitRegister(1),
        &[C64::new(s, 0.0), C64::new(s, 0.0)],
    )
    .unwrap();
    (LindbladSpec::new(h, vec![a]).unwrap(), plus.projector())
}

fn analytic(gamma: f64, omega: f64, t: f64) -> DMatrix<C64> {
    let p1 = 0.5 * (-gamma * t).exp();
    // ρ_01 rotates as e^{iωt} under −i[H, ρ] with H_00 = −ω/2
    let coh = C64::from_polar(0.5 * (-gamma * t / 2.0).exp(), omega * t);
    let mut rho = DMatrix::zeros(2, 2);
    rho[(0, 0)] = C64::new(1.0 - p1, 0.0);
    rho[(1, 1)] = C64::new(p1, 0.0);
    rho[(0, 1)] = coh;
    rho[(1, 0)] = coh.conj();
    rho
}

#[test]
fn analytic_solution_satisfies_sign_conventions() {
    // one tiny RK4 step fixes the rotation direction of the oracle above
    let (spec, rho0) = precessing_decay(0.5, 1.7);
    let sol = integrate_master(&spec, &rho0, 1e-4, 1e-4, 1).unwrap();
    let err = (sol.states[1].matrix() - analytic(0.5, 1.7, 1e-4)).camax();
    assert!(err < 1e-12, "{err}");
}

#[test]
fn halving_step_cuts_error_twelvefold() {
    let (gamma, omega, t_final) = (0.4, 1.7, 4.0);
    let (spec, rho0) = precessing_decay(gamma, omega);
    let exact = analytic(gamma, omega, t_final);
    let errors: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&dt| {
            let sol = integrate_master(&spec, &rho0, dt, t_final, 1).unwrap();
            (sol.states.last().unwrap().matrix() - &exact).camax()
        })
        .collect();
    let ratio = errors[0] / errors[1];
    assert!(ratio >= 12.0, "errors {errors:?}, ratio {ratio}");
}

#[test]
fn lmg_evolution_stays_physical() {
    let p = LmgParams::new(4, 0.5, 1.0, 0.2);
    let spec = lmg_spec(&p).unwrap();
    let rho0 = dicke_state(0, 4).unwrap().projector();
    let sol = integrate_master(&spec, &rho0, 0.01, 50.0, 100).unwrap();
    assert_eq!(sol.states.len(), 51);
    for rho in &sol.states {
        assert!((rho.trace() - 1.0).abs() < 1e-9);
        assert!(rho.hermitian_deviation() < 1e-12);
        assert!(rho.eigenvalues()[0] > -1e-9);
        DensityOperator::new(rho.matrix().clone()).unwrap();
    }
}
