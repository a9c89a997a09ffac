//! Symmetric Dicke states, collective spin operators and the closed-form
//! Schmidt decomposition of Dicke states across a block bipartition.
//!
//! Basis index `m` counts excitations, so `J_z = m − N/2` and `J_+` raises `m`.

use nalgebra::{DMatrix, DVector};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::state::{entropy_from_eigenvalues, Basis, DensityOperator, StateVector};
use crate::C64;

/// Largest `N` for which a Dicke state is expanded into the `2^N` register.
pub const MAX_EXPANSION_QUBITS: usize = 14;

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

/// Pure Dicke state `|m, N>` in the Dicke basis.
pub fn dicke_state(m: usize, n: usize) -> Result<StateVector> {
    if m > n {
        return Err(Error::OutOfRange(format!("excitations {m} > N = {n}")));
    }
    StateVector::basis_state(Basis::Dicke(n), m)
}

/// `|m, N>` expanded in the `2^N` computational basis.
pub fn dicke_to_register(m: usize, n: usize) -> Result<StateVector> {
    dicke_state(m, n).and_then(|d| expand_to_register(&d))
}

/// Expands a Dicke-basis superposition into the full qubit register.
pub fn expand_to_register(state: &StateVector) -> Result<StateVector> {
    let n = match state.basis() {
        Basis::Dicke(n) => n,
        Basis::QubitRegister(_) => {
            return Err(Error::BasisMismatch("expected a Dicke-basis state".into()))
        }
    };
    if n > MAX_EXPANSION_QUBITS {
        return Err(Error::TooLarge {
            n,
            limit: MAX_EXPANSION_QUBITS,
        });
    }
    let weights: Vec<f64> = (0..=n).map(|m| (-0.5 * ln_binomial(n, m)).exp()).collect();
    let c = state.amplitudes();
    let amplitudes = DVector::from_fn(1usize << n, |x, _| {
        let m = x.count_ones() as usize;
        c[m] * weights[m]
    });
    StateVector::new(Basis::QubitRegister(n), amplitudes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollectiveOp {
    Raise,
    Lower,
    X,
    Y,
    Z,
}

/// Collective angular-momentum operator on the `N + 1`-dimensional symmetric
/// sector.
pub fn collective_operator(kind: CollectiveOp, n: usize) -> Result<DMatrix<C64>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "collective operators need N >= 1".into(),
        ));
    }
    let dim = n + 1;
    let mut raise = DMatrix::<C64>::zeros(dim, dim);
    for m in 0..n {
        raise[(m + 1, m)] = C64::new((((m + 1) * (n - m)) as f64).sqrt(), 0.0);
    }
    let op = match kind {
        CollectiveOp::Raise => raise,
        CollectiveOp::Lower => raise.adjoint(),
        CollectiveOp::X => (&raise + raise.adjoint()).unscale(2.0),
        // (J+ − J−)/(2i) = −i (J+ − J−)/2
        CollectiveOp::Y => (&raise - raise.adjoint()) * C64::new(0.0, -0.5),
        CollectiveOp::Z => DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(i as f64 - n as f64 / 2.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    };
    Ok(op)
}

/// Schmidt coefficients of `|m, N>` across the cut after the first `N1` qubits:
/// `|m,N> = Σ_k λ_k |k,N1> ⊗ |m−k,N−N1>`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtRow {
    pub m: usize,
    pub n: usize,
    pub n1: usize,
    /// Smallest valid `k`; `coefficients[i]` belongs to `k = k_min + i`.
    pub k_min: usize,
    pub coefficients: Vec<f64>,
}

impl SchmidtRow {
    pub fn k_range(&self) -> std::ops::RangeInclusive<usize> {
        self.k_min..=self.k_min + self.coefficients.len() - 1
    }
}

#[inline]
fn schmidt_coefficient(n: usize, n1: usize, k: usize, j: usize) -> f64 {
    (0.5 * (ln_binomial(n1, k) + ln_binomial(n - n1, j) - ln_binomial(n, k + j))).exp()
}

pub fn schmidt_row(m: usize, n: usize, n1: usize) -> Result<SchmidtRow> {
    if m > n {
        return Err(Error::OutOfRange(format!("excitations {m} > N = {n}")));
    }
    if n1 == 0 || n1 >= n {
        return Err(Error::OutOfRange(format!("block size {n1} not in 1..{n}")));
    }
    let k_min = m.saturating_sub(n - n1);
    let k_max = m.min(n1);
    let coefficients = (k_min..=k_max)
        .map(|k| schmidt_coefficient(n, n1, k, m - k))
        .collect();
    Ok(SchmidtRow {
        m,
        n,
        n1,
        k_min,
        coefficients,
    })
}

fn dicke_parties(c: &StateVector) -> Result<usize> {
    match c.basis() {
        Basis::Dicke(n) => Ok(n),
        Basis::QubitRegister(_) => Err(Error::BasisMismatch("expected a Dicke-basis state".into())),
    }
}

/// State of the last `N − N1` qubits after tracing out the first `N1`, as an
/// `(N − N1 + 1)`-dimensional operator in the `|j, N−N1>` basis.
pub fn dicke_reduced_state(c: &StateVector, n1: usize) -> Result<DensityOperator> {
    let n = dicke_parties(c)?;
    DickeCuts::new(n)?.reduced_state(c, n1)
}

/// Precomputed Schmidt tables for every block cut of an `N`-qubit Dicke
/// sector. Reuse one instance across many states of the same `N`.
#[derive(Clone, Debug)]
pub struct DickeCuts {
    n: usize,
    // tables[n1 - 1][(k, j)] = λ for m = k + j
    tables: Vec<DMatrix<f64>>,
}

impl DickeCuts {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "block cuts need N >= 2, got {n}"
            )));
        }
        let tables = (1..n)
            .map(|n1| DMatrix::from_fn(n1 + 1, n - n1 + 1, |k, j| schmidt_coefficient(n, n1, k, j)))
            .collect();
        Ok(DickeCuts { n, tables })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, c: &StateVector, n1: usize) -> Result<()> {
        let n = dicke_parties(c)?;
        if n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n + 1,
                found: n + 1,
            });
        }
        if n1 == 0 || n1 >= n {
            return Err(Error::InvalidBipartition(format!(
                "block size {n1} not in 1..{n}"
            )));
        }
        Ok(())
    }

    /// `Ψ[k, j] = λ_k^{k+j} c_{k+j}`: the state written as a matrix over the
    /// two blocks' Dicke bases.
    fn block_matrix(&self, c: &DVector<C64>, n1: usize) -> DMatrix<C64> {
        let table = &self.tables[n1 - 1];
        DMatrix::from_fn(table.nrows(), table.ncols(), |k, j| {
            c[k + j] * table[(k, j)]
        })
    }

    pub fn reduced_state(&self, c: &StateVector, n1: usize) -> Result<DensityOperator> {
        self.check(c, n1)?;
        let psi = self.block_matrix(c.amplitudes(), n1);
        // ρ[j, j'] = Σ_k Ψ[k, j] Ψ[k, j']*
        let rho = psi.transpose() * psi.map(|z| z.conj());
        Ok(DensityOperator::from_matrix_unchecked(rho))
    }

    /// Entanglement entropy (bits) of the cut after the first `N1` qubits,
    /// from the singular values of the Schmidt block matrix.
    pub fn cut_entropy(&self, c: &StateVector, n1: usize) -> Result<f64> {
        self.check(c, n1)?;
        Ok(self.cut_entropy_unchecked(c.amplitudes(), n1))
    }

    pub(crate) fn cut_entropy_unchecked(&self, c: &DVector<C64>, n1: usize) -> f64 {
        let weights: Vec<f64> = self
            .block_matrix(c, n1)
            .singular_values()
            .iter()
            .map(|s| s * s)
            .collect();
        entropy_from_eigenvalues(&weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{binary_entropy, von_neumann_entropy, Bipartition};
    use approx::assert_abs_diff_eq;

    #[test]
    fn register_expansion_examples() {
        let d = dicke_to_register(0, 3).unwrap();
        assert_abs_diff_eq!(d.amplitudes()[0].re, 1.0, epsilon = 1e-15);
        let w = dicke_to_register(1, 3).unwrap();
        let a = 1.0 / 3f64.sqrt();
        for x in 0..8usize {
            let want = if x.count_ones() == 1 { a } else { 0.0 };
            assert_abs_diff_eq!(w.amplitudes()[x].re, want, epsilon = 1e-14);
        }
        let full = dicke_to_register(5, 5).unwrap();
        assert_abs_diff_eq!(full.amplitudes()[31].re, 1.0, epsilon = 1e-14);
        assert!(dicke_to_register(4, 3).is_err());
        assert!(matches!(
            dicke_to_register(1, 15),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn raising_operator_matrix_elements() {
        let jp = collective_operator(CollectiveOp::Raise, 5).unwrap();
        assert_abs_diff_eq!(jp[(1, 0)].re, 5f64.sqrt(), epsilon = 1e-14);
        let jp3 = collective_operator(CollectiveOp::Raise, 3).unwrap();
        assert_abs_diff_eq!(jp3[(2, 1)].re, 2.0, epsilon = 1e-14);
        let jm = collective_operator(CollectiveOp::Lower, 3).unwrap();
        assert_eq!(jm, jp3.adjoint());
        assert!(collective_operator(CollectiveOp::Z, 0).is_err());
    }

    #[test]
    fn raising_matches_register_sum_of_sigma_plus() {
        // J+ acting on |1,3> in the register should equal 2 |2,3>.
        let w = dicke_to_register(1, 3).unwrap();
        let mut out = DVector::<C64>::zeros(8);
        for (x, amp) in w.amplitudes().iter().enumerate() {
            for q in 0..3 {
                if x >> q & 1 == 0 {
                    out[x | 1 << q] += amp;
                }
            }
        }
        let target = dicke_to_register(2, 3).unwrap();
        for x in 0..8 {
            assert_abs_diff_eq!(out[x].re, 2.0 * target.amplitudes()[x].re, epsilon = 1e-14);
        }
    }

    #[test]
    fn su2_commutators() {
        for n in [1usize, 2, 7, 40, 100] {
            let jx = collective_operator(CollectiveOp::X, n).unwrap();
            let jy = collective_operator(CollectiveOp::Y, n).unwrap();
            let jz = collective_operator(CollectiveOp::Z, n).unwrap();
            let i = C64::new(0.0, 1.0);
            let comm = |a: &DMatrix<C64>, b: &DMatrix<C64>| a * b - b * a;
            let tol = 1e-12 * (n * n) as f64;
            assert!((comm(&jx, &jy) - &jz * i).camax() < tol.max(1e-12));
            assert!((comm(&jy, &jz) - &jx * i).camax() < tol.max(1e-12));
            assert!((comm(&jz, &jx) - &jy * i).camax() < tol.max(1e-12));
        }
    }

    #[test]
    fn schmidt_row_examples() {
        let r = schmidt_row(1, 2, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(r.k_range(), 0..=1);
        assert_abs_diff_eq!(r.coefficients[0], h, epsilon = 1e-14);
        assert_abs_diff_eq!(r.coefficients[1], h, epsilon = 1e-14);

        let r = schmidt_row(1, 3, 1).unwrap();
        assert_abs_diff_eq!(r.coefficients[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.coefficients[1], (1.0f64 / 3.0).sqrt(), epsilon = 1e-14);

        let r = schmidt_row(5, 6, 2).unwrap();
        assert_eq!(r.k_range(), 1..=2);
        assert!(schmidt_row(7, 6, 2).is_err());
        assert!(schmidt_row(1, 6, 6).is_err());
        assert!(schmidt_row(1, 6, 0).is_err());
    }

    #[test]
    fn schmidt_rows_survive_large_n() {
        for &n1 in &[1usize, 37, 100, 199] {
            let r = schmidt_row(100, 200, n1).unwrap();
            let s: f64 = r.coefficients.iter().map(|x| x * x).sum();
            assert!((s - 1.0).abs() < 1e-11, "n1 = {n1}: {s}");
            assert!(r.coefficients.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }

    #[test]
    fn reduced_state_examples() {
        let w = dicke_state(1, 3).unwrap();
        let rho = dicke_reduced_state(&w, 1).unwrap();
        assert_eq!(rho.dim(), 3);
        // k = 0 (first qubit down) leaves one excitation among the rest
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.matrix()[(2, 2)].re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            von_neumann_entropy(&rho).unwrap(),
            binary_entropy(1.0 / 3.0),
            epsilon = 1e-12
        );

        let ground = dicke_state(0, 6).unwrap();
        for n1 in 1..6 {
            let rho = dicke_reduced_state(&ground, n1).unwrap();
            assert_eq!(rho.dim(), 6 - n1 + 1);
            assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-14);
        }
        assert!(dicke_reduced_state(&ground, 6).is_err());
        assert!(dicke_reduced_state(&ground, 0).is_err());
    }

    #[test]
    fn cut_entropy_matches_register_for_w_state() {
        let w = dicke_state(2, 5).unwrap();
        let reg = expand_to_register(&w).unwrap();
        let cuts = DickeCuts::new(5).unwrap();
        for n1 in 1..5 {
            let keep = Bipartition::parties_subset(5, &(0..n1).collect::<Vec<_>>()).unwrap();
            let brute = von_neumann_entropy(&reg.partial_trace(&keep).unwrap()).unwrap();
            assert_abs_diff_eq!(cuts.cut_entropy(&w, n1).unwrap(), brute, epsilon = 1e-10);
        }
    }
}
