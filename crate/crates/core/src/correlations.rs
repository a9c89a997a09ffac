//! Genuine multipartite correlations of pure states and their trajectory
//! averages.
//!
//! For a pure state the genuine classical, quantum and half the total
//! correlations coincide and equal the smallest bipartition entropy. The
//! trajectory average takes that minimum per trajectory *before* averaging.

use rayon::prelude::*;

use crate::dicke::DickeCuts;
use crate::error::{Error, Result};
use crate::lindblad::LindbladSpec;
use crate::state::{von_neumann_entropy, Basis, Bipartition, StateVector};
use crate::trajectory::{
    par_map_trajectories, run_trajectory_with, Engine, RunningStats, TrajectoryConfig,
    TrajectoryRecord,
};

/// Entropies closer than this are treated as tied when picking argmin/argmax.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationSample {
    pub time: f64,
    /// Minimum bipartition entropy in bits.
    pub value: f64,
    pub argmin: Bipartition,
    /// Maximum bipartition entropy in bits.
    pub max_value: f64,
    pub argmax: Bipartition,
}

impl CorrelationSample {
    pub fn at(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Genuine classical correlations.
    pub fn classical(&self) -> f64 {
        self.value
    }

    /// Genuine quantum correlations; equal to the classical part for pure states.
    pub fn quantum(&self) -> f64 {
        self.value
    }

    /// Genuine total correlations, twice the pure-state value.
    pub fn total(&self) -> f64 {
        2.0 * self.value
    }
}

/// Min/max over `(cut, entropy)` pairs supplied in tie-break order.
fn select(entries: impl IntoIterator<Item = (Bipartition, f64)>) -> Option<CorrelationSample> {
    let mut iter = entries.into_iter();
    let (first, s0) = iter.next()?;
    let mut sample = CorrelationSample {
        time: 0.0,
        value: s0,
        argmin: first,
        max_value: s0,
        argmax: first,
    };
    for (cut, s) in iter {
        if s < sample.value - TIE_TOLERANCE {
            sample.value = s;
            sample.argmin = cut;
        }
        if s > sample.max_value + TIE_TOLERANCE {
            sample.max_value = s;
            sample.argmax = cut;
        }
    }
    Some(sample)
}

/// Entropy of every canonical qubit bipartition, in tie-break order.
pub fn bipartition_entropies(psi: &StateVector) -> Result<Vec<(Bipartition, f64)>> {
    let n = match psi.basis() {
        Basis::QubitRegister(n) => n,
        Basis::Dicke(_) => {
            return Err(Error::BasisMismatch(
                "expected a qubit register state".into(),
            ))
        }
    };
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "genuine correlations need at least 2 parties, got {n}"
        )));
    }
    Bipartition::canonical_qubit_bipartitions(n)?
        .into_iter()
        .map(|cut| {
            let s = von_neumann_entropy(&psi.partial_trace(&cut)?)?;
            Ok((cut, s))
        })
        .collect()
}

pub fn genuine_correlations_qubits(psi: &StateVector) -> Result<CorrelationSample> {
    let entries = bipartition_entropies(psi)?;
    Ok(select(entries).expect("n >= 2 has at least one cut"))
}

/// Reusable evaluator for Dicke-sector states of a fixed `N`.
#[derive(Clone, Debug)]
pub struct DickeCorrelator {
    cuts: DickeCuts,
}

impl DickeCorrelator {
    pub fn new(n: usize) -> Result<Self> {
        Ok(DickeCorrelator {
            cuts: DickeCuts::new(n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.cuts.n()
    }

    fn check(&self, c: &StateVector) -> Result<()> {
        match c.basis() {
            Basis::Dicke(n) if n == self.cuts.n() => Ok(()),
            Basis::Dicke(n) => Err(Error::DimensionMismatch {
                expected: self.cuts.n() + 1,
                found: n + 1,
            }),
            Basis::QubitRegister(_) => {
                Err(Error::BasisMismatch("expected a Dicke-basis state".into()))
            }
        }
    }

    /// `S(ρ_{N1})` for `N1 = 1..=⌊N/2⌋`.
    pub fn entropies(&self, c: &StateVector) -> Result<Vec<(Bipartition, f64)>> {
        self.check(c)?;
        let n = self.cuts.n();
        Ok((1..=n / 2)
            .map(|n1| {
                (
                    Bipartition::Block { n, n1 },
                    self.cuts.cut_entropy_unchecked(c.amplitudes(), n1),
                )
            })
            .collect())
    }

    pub fn sample(&self, c: &StateVector) -> Result<CorrelationSample> {
        Ok(select(self.entropies(c)?).expect("N >= 2 has at least one cut"))
    }
}

pub fn genuine_correlations_dicke(c: &StateVector) -> Result<CorrelationSample> {
    let n = match c.basis() {
        Basis::Dicke(n) => n,
        Basis::QubitRegister(_) => {
            return Err(Error::BasisMismatch("expected a Dicke-basis state".into()))
        }
    };
    DickeCorrelator::new(n)?.sample(c)
}

/// Dispatches on the state's basis.
pub fn genuine_correlations(psi: &StateVector) -> Result<CorrelationSample> {
    match psi.basis() {
        Basis::QubitRegister(_) => genuine_correlations_qubits(psi),
        Basis::Dicke(_) => genuine_correlations_dicke(psi),
    }
}

/// Evaluates every canonical cut of a fixed register or Dicke sector.
#[derive(Clone, Debug)]
pub enum CutEvaluator {
    Qubits(Vec<Bipartition>),
    Dicke(DickeCorrelator),
}

impl CutEvaluator {
    pub fn for_basis(basis: Basis) -> Result<Self> {
        match basis {
            Basis::QubitRegister(n) => {
                if n < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "genuine correlations need at least 2 parties, got {n}"
                    )));
                }
                Ok(CutEvaluator::Qubits(
                    Bipartition::canonical_qubit_bipartitions(n)?,
                ))
            }
            Basis::Dicke(n) => Ok(CutEvaluator::Dicke(DickeCorrelator::new(n)?)),
        }
    }

    pub fn cuts(&self) -> Vec<Bipartition> {
        match self {
            CutEvaluator::Qubits(cuts) => cuts.clone(),
            CutEvaluator::Dicke(d) => (1..=d.n() / 2)
                .map(|n1| Bipartition::Block { n: d.n(), n1 })
                .collect(),
        }
    }

    /// Entropies in the order of [`CutEvaluator::cuts`].
    pub fn entropies(&self, psi: &StateVector) -> Result<Vec<f64>> {
        match self {
            CutEvaluator::Qubits(cuts) => cuts
                .iter()
                .map(|cut| von_neumann_entropy(&psi.partial_trace(cut)?))
                .collect(),
            CutEvaluator::Dicke(d) => Ok(d.entropies(psi)?.into_iter().map(|(_, s)| s).collect()),
        }
    }
}

/// Cut entropies of every trajectory at every recorded time.
#[derive(Clone, Debug, PartialEq)]
pub struct CutEntropyEnsemble {
    pub times: Vec<f64>,
    pub cuts: Vec<Bipartition>,
    /// `entropies[trajectory][time][cut]`, in bits.
    pub entropies: Vec<Vec<Vec<f64>>>,
    /// Number of jumps per trajectory (zero for diffusive runs).
    pub jump_counts: Vec<usize>,
}

impl CutEntropyEnsemble {
    pub fn n_trajectories(&self) -> usize {
        self.entropies.len()
    }

    pub fn sample(&self, trajectory: usize, k: usize) -> CorrelationSample {
        let entries = self
            .cuts
            .iter()
            .copied()
            .zip(self.entropies[trajectory][k].iter().copied());
        select(entries)
            .expect("nonempty cut list")
            .at(self.times[k])
    }

    /// Per-trajectory minimum over cuts, `[trajectory][time]`.
    pub fn minima(&self) -> Vec<Vec<f64>> {
        self.entropies
            .iter()
            .map(|traj| {
                traj.iter()
                    .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
                    .collect()
            })
            .collect()
    }

    /// Per-trajectory entropy of cut `c`, `[trajectory][time]`.
    pub fn cut_values(&self, c: usize) -> Vec<Vec<f64>> {
        self.entropies
            .iter()
            .map(|traj| traj.iter().map(|row| row[c]).collect())
            .collect()
    }

    pub fn series(&self) -> CorrelationSeries {
        let n_times = self.times.len();
        let n_cuts = self.cuts.len();
        let mut series = CorrelationSeries {
            times: self.times.clone(),
            mean: Vec::with_capacity(n_times),
            stderr: Vec::with_capacity(n_times),
            max_mean: Vec::with_capacity(n_times),
            max_stderr: Vec::with_capacity(n_times),
            cuts: self
                .cuts
                .iter()
                .map(|cut| CutSeries {
                    cut: *cut,
                    mean: Vec::with_capacity(n_times),
                    stderr: Vec::with_capacity(n_times),
                })
                .collect(),
            min_of_means: Vec::with_capacity(n_times),
            argmin_mode: Vec::with_capacity(n_times),
            n_trajectories: self.n_trajectories(),
        };
        for k in 0..n_times {
            let mut min_stats = RunningStats::default();
            let mut max_stats = RunningStats::default();
            let mut per_cut = vec![RunningStats::default(); n_cuts];
            let mut argmin_counts = vec![0usize; n_cuts];
            for traj in 0..self.n_trajectories() {
                let row = &self.entropies[traj][k];
                let sample = self.sample(traj, k);
                min_stats.push(sample.value);
                max_stats.push(sample.max_value);
                for (stats, s) in per_cut.iter_mut().zip(row) {
                    stats.push(*s);
                }
                if let Some(pos) = self.cuts.iter().position(|c| *c == sample.argmin) {
                    argmin_counts[pos] += 1;
                }
            }
            let min_of_means = per_cut.iter().map(|s| s.mean).fold(f64::INFINITY, f64::min);
            assert!(
                min_stats.mean <= min_of_means + 1e-9,
                "average of minima exceeds minimum of averages"
            );
            series.mean.push(min_stats.mean);
            series.stderr.push(min_stats.stderr());
            series.max_mean.push(max_stats.mean);
            series.max_stderr.push(max_stats.stderr());
            series.min_of_means.push(min_of_means);
            let mode = argmin_counts
                .iter()
                .enumerate()
                .fold((0usize, 0usize), |best, (i, &count)| {
                    if count > best.1 {
                        (i, count)
                    } else {
                        best
                    }
                })
                .0;
            series.argmin_mode.push(self.cuts[mode]);
            for (out, stats) in series.cuts.iter_mut().zip(&per_cut) {
                out.mean.push(stats.mean);
                out.stderr.push(stats.stderr());
            }
        }
        series
    }
}

/// Runs `config.n_trajectories` trajectories and records the entropy of every
/// canonical cut at each recorded time, without storing states.
pub fn sample_cut_entropies(
    psi0: &StateVector,
    spec: &LindbladSpec,
    config: &TrajectoryConfig,
) -> Result<CutEntropyEnsemble> {
    config.validate()?;
    let engine = Engine::new(spec, config)?;
    let evaluator = CutEvaluator::for_basis(psi0.basis())?;
    let times = config.record_times()?;
    let runs = par_map_trajectories(config.n_trajectories, |index| {
        let mut rows = Vec::with_capacity(times.len());
        let mut failure = None;
        let jumps = run_trajectory_with(psi0, &engine, config, index, |_, _, psi| match evaluator
            .entropies(psi)
        {
            Ok(row) => rows.push(row),
            Err(e) => {
                failure.get_or_insert(e);
            }
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok((rows, jumps.len())),
        }
    })?;
    let (entropies, jump_counts) = runs.into_iter().unzip();
    Ok(CutEntropyEnsemble {
        times,
        cuts: evaluator.cuts(),
        entropies,
        jump_counts,
    })
}

/// Ensemble statistics of one bipartition's entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct CutSeries {
    pub cut: Bipartition,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Trajectory-averaged correlations on a shared time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    /// Average over trajectories of the per-trajectory minimum (`C_U`).
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Average over trajectories of the per-trajectory maximum.
    pub max_mean: Vec<f64>,
    pub max_stderr: Vec<f64>,
    /// Mean entropy of every canonical cut.
    pub cuts: Vec<CutSeries>,
    /// Minimum over cuts of the mean entropies; an upper bound on `mean`.
    pub min_of_means: Vec<f64>,
    /// Most frequent per-trajectory argmin at each time (ties to the earlier cut).
    pub argmin_mode: Vec<Bipartition>,
    pub n_trajectories: usize,
}

/// `C_U(t)`: per-trajectory minimum bipartition entropy averaged over records.
pub fn average_genuine_correlations(records: &[TrajectoryRecord]) -> Result<CorrelationSeries> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidParameter("no trajectory records".into()))?;
    if records
        .iter()
        .any(|r| r.times != first.times || r.states.len() != r.times.len())
    {
        return Err(Error::MismatchedGrids);
    }
    let basis = first
        .states
        .first()
        .map(StateVector::basis)
        .ok_or_else(|| Error::InvalidParameter("records hold no states".into()))?;
    let evaluator = CutEvaluator::for_basis(basis)?;
    let entropies = records
        .par_iter()
        .map(|r| {
            r.states
                .iter()
                .map(|psi| evaluator.entropies(psi))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let ensemble = CutEntropyEnsemble {
        times: first.times.clone(),
        cuts: evaluator.cuts(),
        entropies,
        jump_counts: records.iter().map(|r| r.jump_log.len()).collect(),
    };
    Ok(ensemble.series())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{dicke_state, expand_to_register};
    use crate::state::binary_entropy;
    use crate::C64;
    use approx::assert_abs_diff_eq;

    fn register(pairs: &[(usize, f64)], n: usize) -> StateVector {
        let mut a = vec![C64::new(0.0, 0.0); 1 << n];
        for &(i, v) in pairs {
            a[i] = C64::new(v, 0.0);
        }
        StateVector::from_slice(Basis::QubitRegister(n), &a).unwrap()
    }

    #[test]
    fn three_qubit_examples() {
        let psi2 = register(&[(0b010, 1.0), (0b001, 1.0)], 3);
        let s = genuine_correlations_qubits(&psi2).unwrap();
        assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-12);
        assert_eq!(s.argmin.to_string(), "A");
        assert_abs_diff_eq!(s.max_value, 1.0, epsilon = 1e-12);

        let ghz = register(&[(0, 1.0), (7, 1.0)], 3);
        let s = genuine_correlations_qubits(&ghz).unwrap();
        assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-12);
        assert_eq!(s.argmin.to_string(), "A");

        let psi1 = register(&[(0b011, 2.0), (0b101, 2.0), (0b110, 1.0)], 3);
        let s = genuine_correlations_qubits(&psi1).unwrap();
        assert_abs_diff_eq!(s.value, binary_entropy(1.0 / 9.0), epsilon = 1e-12);
        assert_eq!(s.argmin.to_string(), "C");
        assert_abs_diff_eq!(s.total(), 2.0 * s.value);
        assert_eq!(s.classical(), s.quantum());
    }

    #[test]
    fn rejects_single_qubit() {
        let one = register(&[(0, 1.0)], 1);
        assert!(genuine_correlations_qubits(&one).is_err());
        assert!(genuine_correlations_dicke(&dicke_state(0, 1).unwrap()).is_err());
    }

    #[test]
    fn dicke_examples() {
        for n in [2usize, 5, 30] {
            let s = genuine_correlations_dicke(&dicke_state(0, n).unwrap()).unwrap();
            assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-12);
        }
        let w = genuine_correlations_dicke(&dicke_state(1, 3).unwrap()).unwrap();
        assert_abs_diff_eq!(w.value, binary_entropy(1.0 / 3.0), epsilon = 1e-12);
        assert_eq!(w.argmin, Bipartition::Block { n: 3, n1: 1 });

        let mut a = vec![C64::new(0.0, 0.0); 5];
        a[0] = C64::new(1.0, 0.0);
        a[4] = C64::new(1.0, 0.0);
        let cat = StateVector::from_slice(Basis::Dicke(4), &a).unwrap();
        let corr = DickeCorrelator::new(4).unwrap();
        for (_, s) in corr.entropies(&cat).unwrap() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        let s = corr.sample(&cat).unwrap();
        assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-12);
        assert_eq!(s.argmin, Bipartition::Block { n: 4, n1: 1 });
    }

    #[test]
    fn dicke_and_register_routes_agree() {
        let n = 6;
        let amps: Vec<C64> = (0..=n)
            .map(|m| C64::from_polar(0.2 + (m as f64 * 1.7).sin().abs(), m as f64))
            .collect();
        let c = StateVector::from_slice(Basis::Dicke(n), &amps).unwrap();
        let d = genuine_correlations_dicke(&c).unwrap();
        let q = genuine_correlations_qubits(&expand_to_register(&c).unwrap()).unwrap();
        assert_abs_diff_eq!(d.value, q.value, epsilon = 1e-9);
        assert_abs_diff_eq!(d.max_value, q.max_value, epsilon = 1e-9);
    }

    #[test]
    fn averaging_single_record_reproduces_curve() {
        let psi1 = register(&[(0b011, 2.0), (0b101, 2.0), (0b110, 1.0)], 3);
        let psi2 = register(&[(0b010, 1.0), (0b001, 1.0)], 3);
        let rec = TrajectoryRecord {
            times: vec![0.0, 1.0],
            states: vec![psi1.clone(), psi2.clone()],
            jump_log: vec![],
        };
        let series = average_genuine_correlations(std::slice::from_ref(&rec)).unwrap();
        assert_abs_diff_eq!(series.mean[0], genuine_correlations(&psi1).unwrap().value);
        assert_abs_diff_eq!(series.mean[1], 0.0, epsilon = 1e-12);
        assert!(series.stderr[0].is_nan());
        assert_eq!(series.cuts.len(), 3);
    }

    #[test]
    fn average_of_minima_below_minimum_of_averages() {
        let a = register(&[(0b011, 1.0), (0b100, 1.0)], 3); // A|BC cut entangled
        let b = register(&[(0b001, 1.0), (0b110, 1.0)], 3);
        let recs: Vec<TrajectoryRecord> = [a, b]
            .into_iter()
            .map(|s| TrajectoryRecord {
                times: vec![0.0],
                states: vec![s],
                jump_log: vec![],
            })
            .collect();
        let series = average_genuine_correlations(&recs).unwrap();
        assert!(series.mean[0] <= series.min_of_means[0] + 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let s = register(&[(0, 1.0)], 2);
        let r1 = TrajectoryRecord {
            times: vec![0.0],
            states: vec![s.clone()],
            jump_log: vec![],
        };
        let r2 = TrajectoryRecord {
            times: vec![0.5],
            states: vec![s],
            jump_log: vec![],
        };
        assert_eq!(
            average_genuine_correlations(&[r1, r2]).unwrap_err(),
            Error::MismatchedGrids
        );
    }

    #[test]
    fn streaming_matches_stored_records() {
        use crate::models::{psi1, three_qubit_spec, ThreeQubitScenario, ThreeQubitUnraveling};
        use crate::trajectory::run_records;
        let spec = three_qubit_spec(&ThreeQubitScenario::new(
            1.0,
            5.0,
            1.0,
            ThreeQubitUnraveling::BeamSplitterAB,
        ))
        .unwrap();
        let config = TrajectoryConfig {
            dt: 0.005,
            t_final: 1.0,
            record_stride: 20,
            n_trajectories: 40,
            master_seed: 3,
            ..Default::default()
        };
        let streamed = sample_cut_entropies(&psi1(), &spec, &config).unwrap();
        let stored =
            average_genuine_correlations(&run_records(&psi1(), &spec, &config).unwrap()).unwrap();
        assert_eq!(streamed.series(), stored);
        assert_eq!(streamed.n_trajectories(), 40);
        assert!(streamed.jump_counts.iter().any(|&j| j > 0));
    }

    #[test]
    fn direct_detection_keeps_psi2_uncorrelated() {
        use crate::models::{psi2, three_qubit_spec, ThreeQubitScenario, ThreeQubitUnraveling};
        let spec = three_qubit_spec(&ThreeQubitScenario::new(
            1.0,
            1.0,
            1.0,
            ThreeQubitUnraveling::Direct,
        ))
        .unwrap();
        let config = TrajectoryConfig {
            dt: 0.01,
            t_final: 3.0,
            record_stride: 10,
            n_trajectories: 64,
            ..Default::default()
        };
        let series = sample_cut_entropies(&psi2(), &spec, &config)
            .unwrap()
            .series();
        assert!(series.mean.iter().all(|v| v.abs() < 1e-12));
    }
}
