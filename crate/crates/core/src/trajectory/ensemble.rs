//! Seeded ensembles of trajectories with deterministic aggregation.
//!
//! Work is split into fixed-size chunks of consecutive trajectory indices.
//! Each chunk is folded sequentially and chunk results are merged pairwise in
//! index order, so the output is bitwise identical for any thread count.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{run_trajectory_with, Engine, TrajectoryConfig, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::lindblad::LindbladSpec;
use crate::state::{DensityOperator, StateVector};
use crate::C64;

const CHUNK: usize = 16;

/// Streaming mean/variance with a deterministic pairwise merge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    pub n: usize,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        RunningStats {
            n,
            mean: self.mean + delta * nb / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }

    /// Unbiased sample variance; NaN for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// `std / √n`; NaN for a single sample.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Named scalar function of a pure state, averaged over the ensemble.
pub struct Observable {
    pub name: String,
    f: Box<dyn Fn(&StateVector) -> f64 + Send + Sync>,
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&StateVector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Observable {
            name: name.into(),
            f: Box::new(f),
        }
    }

    /// `<ψ|op|ψ>` (real part).
    pub fn expectation(name: impl Into<String>, op: DMatrix<C64>) -> Self {
        Observable::new(name, move |psi| {
            let a = psi.amplitudes();
            a.dotc(&(&op * a)).re
        })
    }

    pub fn eval(&self, psi: &StateVector) -> f64 {
        (self.f)(psi)
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    pub name: String,
    pub mean: Vec<f64>,
    /// `sample std / √n`; NaN when `n = 1`.
    pub stderr: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub observables: Vec<ObservableSeries>,
    /// `mean_j |ψ_j(t)><ψ_j(t)|` at each recorded time.
    pub density: Vec<DensityOperator>,
    pub n_trajectories: usize,
}

impl EnsembleResult {
    pub fn observable(&self, name: &str) -> Option<&ObservableSeries> {
        self.observables.iter().find(|o| o.name == name)
    }
}

/// Maps `f` over trajectory indices `0..n` in parallel and returns results in
/// index order. The first failing index (lowest) is reported.
pub fn par_map_trajectories<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(&f).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::TrajectoryFailed {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Clone)]
struct Accumulator {
    stats: Vec<Vec<RunningStats>>,
    rho_sum: Vec<DMatrix<C64>>,
    n: usize,
}

impl Accumulator {
    fn new(n_times: usize, n_obs: usize, dim: usize) -> Self {
        Accumulator {
            stats: vec![vec![RunningStats::default(); n_times]; n_obs],
            rho_sum: vec![DMatrix::zeros(dim, dim); n_times],
            n: 0,
        }
    }

    fn merge(mut self, other: &Accumulator) -> Accumulator {
        for (a, b) in self.stats.iter_mut().zip(&other.stats) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.merge(y);
            }
        }
        for (a, b) in self.rho_sum.iter_mut().zip(&other.rho_sum) {
            *a += b;
        }
        self.n += other.n;
        self
    }
}

fn pairwise(mut parts: Vec<Accumulator>) -> Option<Accumulator> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut iter = parts.into_iter();
        while let Some(a) = iter.next() {
            match iter.next() {
                Some(b) => next.push(a.merge(&b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Runs `config.n_trajectories` trajectories (jump or diffusive per
/// `config.method`) and aggregates the observables and the reconstructed
/// density operator at every recorded time.
pub fn run_ensemble(
    psi0: &StateVector,
    spec: &LindbladSpec,
    config: &TrajectoryConfig,
    observables: &[Observable],
) -> Result<EnsembleResult> {
    config.validate()?;
    let engine = Engine::new(spec, config)?;
    let times = config.record_times()?;
    let n = config.n_trajectories;
    let n_chunks = n.div_ceil(CHUNK);
    let dim = psi0.dim();

    let chunks: Vec<Result<Accumulator>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(times.len(), observables.len(), dim);
            for index in c * CHUNK..((c + 1) * CHUNK).min(n) {
                run_trajectory_with(psi0, &engine, config, index, |k, _, psi| {
                    for (o, obs) in observables.iter().enumerate() {
                        acc.stats[o][k].push(obs.eval(psi));
                    }
                    let a = psi.amplitudes();
                    acc.rho_sum[k].gerc(C64::new(1.0, 0.0), a, a, C64::new(1.0, 0.0));
                })
                .map_err(|e| Error::TrajectoryFailed {
                    index,
                    source: Box::new(e),
                })?;
                acc.n += 1;
            }
            Ok(acc)
        })
        .collect();
    let chunks = chunks.into_iter().collect::<Result<Vec<_>>>()?;
    let total = pairwise(chunks).expect("at least one trajectory");

    let observables = observables
        .iter()
        .zip(&total.stats)
        .map(|(obs, stats)| ObservableSeries {
            name: obs.name.clone(),
            mean: stats.iter().map(|s| s.mean).collect(),
            stderr: stats.iter().map(RunningStats::stderr).collect(),
        })
        .collect();
    let density = total
        .rho_sum
        .into_iter()
        .map(|m| density_from_sum(m, total.n))
        .collect();
    Ok(EnsembleResult {
        times,
        observables,
        density,
        n_trajectories: total.n,
    })
}

fn density_from_sum(sum: DMatrix<C64>, n: usize) -> DensityOperator {
    let mut m = sum.unscale(n as f64);
    m = (&m + m.adjoint()).unscale(2.0);
    DensityOperator::from_matrix_unchecked(m)
}

/// All trajectory records, in index order.
pub fn run_records(
    psi0: &StateVector,
    spec: &LindbladSpec,
    config: &TrajectoryConfig,
) -> Result<Vec<TrajectoryRecord>> {
    config.validate()?;
    let engine = Engine::new(spec, config)?;
    par_map_trajectories(config.n_trajectories, |index| {
        let mut times = Vec::new();
        let mut states = Vec::new();
        let jump_log = run_trajectory_with(psi0, &engine, config, index, |_, t, psi| {
            times.push(t);
            states.push(psi.clone());
        })?;
        Ok(TrajectoryRecord {
            times,
            states,
            jump_log,
        })
    })
}

/// `ρ(t) = mean_j |ψ_j(t)><ψ_j(t)|` from stored records.
pub fn reconstruct_density(records: &[TrajectoryRecord]) -> Result<Vec<DensityOperator>> {
    let first = records.first().ok_or_else(|| {
        Error::InvalidParameter("cannot reconstruct from zero trajectories".into())
    })?;
    if records.iter().any(|r| r.times != first.times) {
        return Err(Error::MismatchedGrids);
    }
    let dim = first.states.first().map_or(0, StateVector::dim);
    Ok((0..first.times.len())
        .map(|k| {
            let mut sum = DMatrix::<C64>::zeros(dim, dim);
            for r in records {
                let a = r.states[k].amplitudes();
                sum.gerc(C64::new(1.0, 0.0), a, a, C64::new(1.0, 0.0));
            }
            density_from_sum(sum, records.len())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Basis;
    use crate::trajectory::Method;
    use approx::assert_abs_diff_eq;

    fn decay_spec(gamma: f64) -> LindbladSpec {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = C64::new(gamma.sqrt(), 0.0);
        LindbladSpec::new(DMatrix::zeros(2, 2), vec![a]).unwrap()
    }

    fn excited() -> StateVector {
        StateVector::basis_state(Basis::QubitRegister(1), 1).unwrap()
    }

    fn population() -> Observable {
        Observable::new("p1", |psi| psi.amplitudes()[1].norm_sqr())
    }

    #[test]
    fn running_stats_merge_matches_sequential() {
        let xs: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 13.0).collect();
        let all: RunningStats = xs.iter().copied().collect();
        let a: RunningStats = xs[..20].iter().copied().collect();
        let b: RunningStats = xs[20..].iter().copied().collect();
        let merged = a.merge(&b);
        assert_eq!(merged.n, all.n);
        assert_abs_diff_eq!(merged.mean, all.mean, epsilon = 1e-12);
        assert_abs_diff_eq!(merged.variance(), all.variance(), epsilon = 1e-12);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert_abs_diff_eq!(all.variance(), var, epsilon = 1e-12);
    }

    #[test]
    fn single_trajectory_has_undefined_errors() {
        let config = TrajectoryConfig {
            dt: 0.01,
            t_final: 0.5,
            record_stride: 10,
            n_trajectories: 1,
            master_seed: 4,
            ..Default::default()
        };
        let spec = decay_spec(1.0);
        let res = run_ensemble(&excited(), &spec, &config, &[population()]).unwrap();
        let rec = super::super::run_jump_trajectory(&excited(), &spec, &config, 0).unwrap();
        let series = res.observable("p1").unwrap();
        for (k, s) in rec.states.iter().enumerate() {
            assert_eq!(series.mean[k], s.amplitudes()[1].norm_sqr());
            assert!(series.stderr[k].is_nan());
        }
    }

    #[test]
    fn decay_population_matches_exponential() {
        let gamma = 1.0;
        let config = TrajectoryConfig {
            method: Method::Jump,
            dt: 0.002,
            t_final: 2.0,
            record_stride: 250,
            n_trajectories: 2000,
            master_seed: 2024,
            ..Default::default()
        };
        let res = run_ensemble(&excited(), &decay_spec(gamma), &config, &[population()]).unwrap();
        let series = res.observable("p1").unwrap();
        for t in [0.5, 1.0, 2.0] {
            let k = res
                .times
                .iter()
                .position(|&s| (s - t).abs() < 1e-9)
                .unwrap();
            let want = (-gamma * t).exp();
            assert!(
                (series.mean[k] - want).abs() < 3.0 * series.stderr[k],
                "t={t}: {} vs {want} ± {}",
                series.mean[k],
                series.stderr[k]
            );
            assert_abs_diff_eq!(res.density[k].trace(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let config = TrajectoryConfig {
            dt: 0.01,
            t_final: 1.0,
            record_stride: 20,
            n_trajectories: 53,
            master_seed: 1,
            ..Default::default()
        };
        let spec = decay_spec(0.8);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&excited(), &spec, &config, &[population()]).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.observables, b.observables);
        assert_eq!(a.density, b.density);
    }

    #[test]
    fn records_and_streaming_agree() {
        let config = TrajectoryConfig {
            dt: 0.01,
            t_final: 1.0,
            record_stride: 25,
            n_trajectories: 40,
            master_seed: 77,
            ..Default::default()
        };
        let spec = decay_spec(1.0);
        let recs = run_records(&excited(), &spec, &config).unwrap();
        let rho = reconstruct_density(&recs).unwrap();
        let res = run_ensemble(&excited(), &spec, &config, &[]).unwrap();
        for (a, b) in rho.iter().zip(&res.density) {
            assert_abs_diff_eq!((a.matrix() - b.matrix()).camax(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn failures_report_trajectory_index() {
        let config = TrajectoryConfig {
            dt: 0.05,
            t_final: 1.0,
            n_trajectories: 3,
            ..Default::default()
        };
        let err = run_ensemble(&excited(), &decay_spec(10.0), &config, &[]).unwrap_err();
        assert!(
            matches!(err, Error::TrajectoryFailed { index: 0, .. }),
            "{err}"
        );
    }
}
