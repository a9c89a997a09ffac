//! Finite-dimensional pure and mixed states, bipartitions, partial traces and
//! von Neumann entropies.
//!
//! Qubit registers use the convention that party 0 (qubit "A") is the most
//! significant bit of the computational-basis index, so `|011>` is index 3
//! for a three-qubit register ordered `A B C`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

/// Largest register that may be materialized as a dense state vector.
pub const MAX_REGISTER_QUBITS: usize = 24;

/// Eigenvalues below this are treated as exact zeros in `p log p`.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Elementwise Hermiticity tolerance for density operators.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Basis a state vector is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    /// `n` qubits, dimension `2^n`.
    QubitRegister(usize),
    /// Symmetric Dicke sector of `N` qubits, dimension `N + 1`; amplitude
    /// index is the excitation count `m`.
    Dicke(usize),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::QubitRegister(n) => 1usize << n,
            Basis::Dicke(n) => n + 1,
        }
    }

    /// Number of physical qubits described by the basis.
    pub fn parties(&self) -> usize {
        match *self {
            Basis::QubitRegister(n) | Basis::Dicke(n) => n,
        }
    }
}

/// Normalized complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: Basis,
    amplitudes: DVector<C64>,
}

impl StateVector {
    /// Builds a state and normalizes it.
    pub fn new(basis: Basis, amplitudes: DVector<C64>) -> Result<Self> {
        if let Basis::QubitRegister(n) = basis {
            if n > MAX_REGISTER_QUBITS {
                return Err(Error::TooLarge {
                    n,
                    limit: MAX_REGISTER_QUBITS,
                });
            }
        }
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        let mut state = StateVector { basis, amplitudes };
        state.normalize()?;
        Ok(state)
    }

    pub fn from_slice(basis: Basis, amplitudes: &[C64]) -> Result<Self> {
        Self::new(basis, DVector::from_column_slice(amplitudes))
    }

    /// Computational (or Dicke) basis vector `index`.
    pub fn basis_state(basis: Basis, index: usize) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(Error::OutOfRange(format!(
                "basis index {index} for dimension {dim}"
            )));
        }
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(StateVector { basis, amplitudes })
    }

    /// Wraps amplitudes that the caller has already normalized.
    pub(crate) fn from_normalized(basis: Basis, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), basis.dim());
        StateVector { basis, amplitudes }
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.amplitudes.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        self.amplitudes.unscale_mut(norm);
        Ok(())
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<psi|op|psi>`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<C64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.nrows(),
            });
        }
        Ok(self.amplitudes.dotc(&(op * &self.amplitudes)))
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> DensityOperator {
        DensityOperator {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Reduced state of the parties in `keep`.
    pub fn partial_trace(&self, keep: &Bipartition) -> Result<DensityOperator> {
        let n = self.register_qubits()?;
        let (kept, traced) = keep.split_for(n)?;
        let dk = 1usize << kept.len();
        let dr = 1usize << traced.len();
        let mut schmidt = DMatrix::<C64>::zeros(dk, dr);
        for (x, amp) in self.amplitudes.iter().enumerate() {
            schmidt[(gather(x, n, &kept), gather(x, n, &traced))] = *amp;
        }
        let matrix = &schmidt * schmidt.adjoint();
        Ok(DensityOperator::from_matrix_unchecked(matrix))
    }

    fn register_qubits(&self) -> Result<usize> {
        match self.basis {
            Basis::QubitRegister(n) => Ok(n),
            Basis::Dicke(_) => Err(Error::BasisMismatch(
                "operation requires a qubit register state".into(),
            )),
        }
    }
}

/// `a ⊗ b`, with `a`'s qubits first.
pub fn tensor_product(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let (na, nb) = match (a.basis, b.basis) {
        (Basis::QubitRegister(na), Basis::QubitRegister(nb)) => (na, nb),
        _ => {
            return Err(Error::BasisMismatch(
                "tensor product needs two qubit register states".into(),
            ))
        }
    };
    if na + nb > MAX_REGISTER_QUBITS {
        return Err(Error::TooLarge {
            n: na + nb,
            limit: MAX_REGISTER_QUBITS,
        });
    }
    let db = b.dim();
    let amplitudes = DVector::from_fn(a.dim() * db, |i, _| {
        a.amplitudes[i / db] * b.amplitudes[i % db]
    });
    Ok(StateVector::from_normalized(
        Basis::QubitRegister(na + nb),
        amplitudes,
    ))
}

/// Packs the bits of `x` belonging to `parties` into a compact index, with the
/// first listed party most significant.
fn gather(x: usize, n: usize, parties: &[usize]) -> usize {
    let len = parties.len();
    parties.iter().enumerate().fold(0, |acc, (pos, &p)| {
        let bit = (x >> (n - 1 - p)) & 1;
        acc | (bit << (len - 1 - pos))
    })
}

/// Inverse of [`gather`] for a full split of the register.
fn scatter(i: usize, kept: &[usize], r: usize, traced: &[usize], n: usize) -> usize {
    let mut x = 0usize;
    for (pos, &p) in kept.iter().enumerate() {
        x |= ((i >> (kept.len() - 1 - pos)) & 1) << (n - 1 - p);
    }
    for (pos, &p) in traced.iter().enumerate() {
        x |= ((r >> (traced.len() - 1 - pos)) & 1) << (n - 1 - p);
    }
    x
}

/// Hermitian, positive, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-10), unit trace (1e-9) and positivity (-1e-9).
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let rho = DensityOperator { matrix };
        let deviation = rho.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = rho.trace();
        if (trace - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "density operator trace {trace} differs from 1"
            )));
        }
        if let Some(&min) = rho.eigenvalues().first() {
            if min < -1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "density operator has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation. Callers are responsible for the
    /// density-operator invariants.
    pub fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        DensityOperator { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut matrix = DMatrix::<C64>::identity(dim, dim);
        matrix.unscale_mut(dim as f64);
        DensityOperator { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.matrix.norm_squared()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Reduced state of the parties in `keep`; the operator must live on a
    /// `2^n`-dimensional register with `n` given by the bipartition.
    pub fn partial_trace(&self, keep: &Bipartition) -> Result<DensityOperator> {
        let n = keep.parties();
        if self.dim() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1usize << n,
                found: self.dim(),
            });
        }
        let (kept, traced) = keep.split_for(n)?;
        let dk = 1usize << kept.len();
        let dr = 1usize << traced.len();
        let index: Vec<Vec<usize>> = (0..dk)
            .map(|i| (0..dr).map(|r| scatter(i, &kept, r, &traced, n)).collect())
            .collect();
        let matrix = DMatrix::from_fn(dk, dk, |i, j| {
            (0..dr)
                .map(|r| self.matrix[(index[i][r], index[j][r])])
                .sum()
        });
        Ok(DensityOperator { matrix })
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        // for Hermitian matrices the singular values are |eigenvalues|
        let diff = hermitian_part(&(&self.matrix - &other.matrix));
        Ok(0.5 * diff.singular_values().sum())
    }
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).unscale(2.0)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
///
/// The tridiagonal QL solver can break down (NaN or garbage) on large, highly
/// degenerate inputs such as reduced states of Dicke states. Its output is
/// checked against the trace and Frobenius norm; on failure the spectrum is
/// taken from the singular values of `H + ‖H‖_F I`, which is positive
/// semidefinite, and shifted back.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let h = hermitian_part(m);
    let trace = h.trace().re;
    let frob2 = h.norm_squared();
    let shift = frob2.sqrt();
    let tol = 1e-10 * frob2.max(f64::MIN_POSITIVE).sqrt() * n as f64;
    let direct: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    let consistent = direct.iter().all(|v| v.is_finite())
        && (direct.iter().sum::<f64>() - trace).abs() <= tol
        && (direct.iter().map(|v| v * v).sum::<f64>() - frob2).abs() <= tol * shift.max(1.0);
    let mut values = if consistent {
        direct
    } else {
        let shifted = h + DMatrix::<C64>::identity(n, n) * C64::new(shift, 0.0);
        shifted
            .singular_values()
            .iter()
            .map(|s| s - shift)
            .collect()
    };
    values.sort_by(f64::total_cmp);
    values
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let deviation = rho.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(entropy_from_eigenvalues(&rho.eigenvalues()))
}

/// `−Σ p log₂ p`, dropping eigenvalues within [`EIGENVALUE_FLOOR`] of 0 or 1
/// so that rounding noise on a pure spectrum gives exactly zero.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    let s: f64 = eigenvalues
        .iter()
        .filter(|&&p| p > EIGENVALUE_FLOOR && p < 1.0 - EIGENVALUE_FLOOR)
        .map(|&p| -p * p.log2())
        .sum();
    s.max(0.0)
}

/// Binary entropy `h₂(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_from_eigenvalues(&[p, 1.0 - p])
}

/// A split of the parties into a subset and its complement.
///
/// Qubit bipartitions keep the subset exactly as constructed (so they can be
/// used to select which parties a partial trace keeps); [`Bipartition::canonical`]
/// returns the representative used when reporting minima: the smaller side, or
/// for equal sizes the side containing party 0. Dicke bipartitions are block
/// sizes `N1`, canonically `N1 ≤ N − N1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bipartition {
    Parties { n: usize, mask: u64 },
    Block { n: usize, n1: usize },
}

impl Bipartition {
    pub fn parties_subset(n: usize, subset: &[usize]) -> Result<Self> {
        if n > 63 {
            return Err(Error::TooLarge { n, limit: 63 });
        }
        let mut mask = 0u64;
        for &p in subset {
            if p >= n {
                return Err(Error::InvalidBipartition(format!(
                    "party {p} out of range for {n} parties"
                )));
            }
            mask |= 1 << p;
        }
        Self::from_mask(n, mask)
    }

    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        if n > 63 {
            return Err(Error::TooLarge { n, limit: 63 });
        }
        let full = (1u64 << n) - 1;
        if mask == 0 || mask & full == full || mask & !full != 0 {
            return Err(Error::InvalidBipartition(format!(
                "subset mask {mask:#b} must be a nonempty proper subset of {n} parties"
            )));
        }
        Ok(Bipartition::Parties { n, mask })
    }

    pub fn block(n: usize, n1: usize) -> Result<Self> {
        if n1 == 0 || n1 >= n {
            return Err(Error::InvalidBipartition(format!(
                "block size {n1} must lie in 1..={}",
                n.saturating_sub(1)
            )));
        }
        Ok(Bipartition::Block { n, n1 })
    }

    /// Total number of parties.
    pub fn parties(&self) -> usize {
        match *self {
            Bipartition::Parties { n, .. } | Bipartition::Block { n, .. } => n,
        }
    }

    /// Size of the subset side.
    pub fn subset_size(&self) -> usize {
        match *self {
            Bipartition::Parties { mask, .. } => mask.count_ones() as usize,
            Bipartition::Block { n1, .. } => n1,
        }
    }

    /// Subset parties in ascending order (`0..N1` for a block).
    pub fn subset(&self) -> Vec<usize> {
        match *self {
            Bipartition::Parties { n, mask } => (0..n).filter(|p| mask >> p & 1 == 1).collect(),
            Bipartition::Block { n1, .. } => (0..n1).collect(),
        }
    }

    pub fn complement(&self) -> Self {
        match *self {
            Bipartition::Parties { n, mask } => Bipartition::Parties {
                n,
                mask: !mask & ((1u64 << n) - 1),
            },
            Bipartition::Block { n, n1 } => Bipartition::Block { n, n1: n - n1 },
        }
    }

    pub fn canonical(&self) -> Self {
        match *self {
            Bipartition::Parties { n, mask } => {
                let size = mask.count_ones() as usize;
                let keep_self = 2 * size < n || (2 * size == n && mask & 1 == 1);
                if keep_self {
                    *self
                } else {
                    self.complement()
                }
            }
            Bipartition::Block { n, n1 } => Bipartition::Block {
                n,
                n1: n1.min(n - n1),
            },
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical() == *self
    }

    /// Ordering key used for deterministic tie-breaking: subset size, then the
    /// sorted subset lexicographically.
    pub fn order_key(&self) -> (usize, Vec<usize>) {
        (self.subset_size(), self.subset())
    }

    /// All `2^(n−1) − 1` canonical qubit bipartitions, sorted by [`order_key`].
    ///
    /// [`order_key`]: Bipartition::order_key
    pub fn canonical_qubit_bipartitions(n: usize) -> Result<Vec<Self>> {
        if !(2..=MAX_REGISTER_QUBITS).contains(&n) {
            return Err(Error::InvalidParameter(format!(
                "bipartitions need 2..={MAX_REGISTER_QUBITS} parties, got {n}"
            )));
        }
        let mut cuts: Vec<Self> = (1..(1u64 << n) - 1)
            .map(|mask| Bipartition::Parties { n, mask })
            .filter(Bipartition::is_canonical)
            .collect();
        cuts.sort_by_key(Bipartition::order_key);
        Ok(cuts)
    }

    fn split_for(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        match *self {
            Bipartition::Parties { n: bn, mask } if bn == n => {
                let kept = self.subset();
                let traced = (0..n).filter(|p| mask >> p & 1 == 0).collect();
                Ok((kept, traced))
            }
            Bipartition::Parties { n: bn, .. } => Err(Error::InvalidBipartition(format!(
                "bipartition of {bn} parties used on a {n}-qubit register"
            ))),
            Bipartition::Block { .. } => Err(Error::BasisMismatch(
                "block bipartitions apply to Dicke states".into(),
            )),
        }
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Bipartition::Parties { n, .. } if n <= 26 => {
                let letters: String = self
                    .subset()
                    .into_iter()
                    .map(|p| (b'A' + p as u8) as char)
                    .collect();
                f.write_str(&letters)
            }
            Bipartition::Parties { .. } => {
                let parts: Vec<String> = self.subset().iter().map(|p| p.to_string()).collect();
                write!(f, "{{{}}}", parts.join(" "))
            }
            Bipartition::Block { n1, .. } => write!(f, "N1={n1}"),
        }
    }
}
