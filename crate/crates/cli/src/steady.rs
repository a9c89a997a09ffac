//! Steady-state statistics from a post-burn-in window of recorded samples.

use gmcorr::correlations::CutEntropyEnsemble;
use gmcorr::trajectory::RunningStats;

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyStateStats {
    pub n_trajectories: usize,
    /// Samples per trajectory inside the window after striding.
    pub window_samples: usize,
    /// Ensemble mean of per-trajectory time-averaged `C_U`.
    pub mean: f64,
    pub stderr: f64,
    /// Same for the largest bipartition entropy.
    pub max_mean: f64,
    pub max_stderr: f64,
    pub first_half_mean: f64,
    pub first_half_stderr: f64,
    pub second_half_mean: f64,
    pub second_half_stderr: f64,
    /// `|first − second| / √(se₁² + se₂²)`; NaN with fewer than two samples.
    pub drift_sigma: f64,
    pub mean_jumps: f64,
}

/// Flags burn-in as inadequate at or above this drift.
pub const STATIONARITY_SIGMA: f64 = 2.0;

impl SteadyStateStats {
    /// `None` when the window is too short to split.
    pub fn stationary(&self) -> Option<bool> {
        if self.drift_sigma.is_nan() {
            None
        } else {
            Some(self.drift_sigma < STATIONARITY_SIGMA)
        }
    }
}

fn window_average(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Time-averages every trajectory over its recorded samples (all of which lie
/// past burn-in), keeping every `stride`-th one, then averages over
/// trajectories. Trajectory averages are independent, so the standard error
/// is the plain one over trajectories.
pub fn steady_state(ensemble: &CutEntropyEnsemble, stride: usize) -> SteadyStateStats {
    let stride = stride.max(1);
    let ks: Vec<usize> = (0..ensemble.times.len()).step_by(stride).collect();
    let half = ks.len() / 2;
    let mut whole = RunningStats::default();
    let mut maxima = RunningStats::default();
    let mut first = RunningStats::default();
    let mut second = RunningStats::default();
    let mut jumps = RunningStats::default();
    for (traj, rows) in ensemble.entropies.iter().enumerate() {
        let mins: Vec<f64> = ks
            .iter()
            .map(|&k| rows[k].iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        let maxs: Vec<f64> = ks
            .iter()
            .map(|&k| rows[k].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        whole.push(window_average(&mins));
        maxima.push(window_average(&maxs));
        if half > 0 {
            first.push(window_average(&mins[..half]));
            second.push(window_average(&mins[ks.len() - half..]));
        }
        jumps.push(ensemble.jump_counts[traj] as f64);
    }
    let drift_sigma = if half == 0 {
        f64::NAN
    } else {
        let diff = (first.mean - second.mean).abs();
        let se = first.stderr().hypot(second.stderr());
        if diff == 0.0 {
            0.0
        } else {
            diff / se
        }
    };
    let nan_if_empty = |s: &RunningStats, v: f64| if s.n == 0 { f64::NAN } else { v };
    SteadyStateStats {
        n_trajectories: ensemble.n_trajectories(),
        window_samples: ks.len(),
        mean: whole.mean,
        stderr: whole.stderr(),
        max_mean: maxima.mean,
        max_stderr: maxima.stderr(),
        first_half_mean: nan_if_empty(&first, first.mean),
        first_half_stderr: nan_if_empty(&first, first.stderr()),
        second_half_mean: nan_if_empty(&second, second.mean),
        second_half_stderr: nan_if_empty(&second, second.stderr()),
        drift_sigma,
        mean_jumps: jumps.mean,
    }
}
