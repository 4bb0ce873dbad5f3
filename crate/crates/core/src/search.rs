//! Search Hamiltonians and single realizations of search on a temporal
//! network.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Hamiltonian, QuantumState, TaylorStepper};
use crate::graph::{check_probability, sample_er_graph, uniform_vector, AdjacencyMatrix};
use crate::stream::StreamKey;

/// `pi sqrt(n) / 2`, the optimal search time on the complete graph.
pub fn nominal_time(n: usize) -> f64 {
    PI * (n as f64).sqrt() / 2.0
}

/// Overall sign of the search Hamiltonian. Both give identical success
/// probabilities for real adjacency matrices and a real initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `-E|w><w| - gamma A`
    #[default]
    Negative,
    /// `+E|w><w| + gamma A`
    Positive,
}

/// How each interval is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// Pick per interval from a flop estimate.
    #[default]
    Auto,
    Spectral,
    Taylor,
}

fn default_energy() -> f64 {
    1.0
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n: usize,
    pub p: f64,
    pub tau: f64,
    /// Hopping rate; `1/(np)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub marked: usize,
    #[serde(default = "default_energy")]
    pub site_energy: f64,
    /// Horizon; ten nominal search times when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Sampling step; `min(tau, 0.05 sqrt(n))` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub sign: SignConvention,
    #[serde(default)]
    pub propagation: Propagation,
}

impl SearchConfig {
    pub fn new(n: usize, p: f64, tau: f64) -> Self {
        Self {
            n,
            p,
            tau,
            gamma: None,
            marked: 0,
            site_energy: 1.0,
            t_max: None,
            dt: None,
            success_threshold: 0.5,
            sign: SignConvention::Negative,
            propagation: Propagation::Auto,
        }
    }

    /// `1/(np)`; for `p = 0` the adjacency term vanishes and 1 is used.
    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| if self.p > 0.0 { 1.0 / (self.n as f64 * self.p) } else { 1.0 })
    }

    pub fn nominal_time(&self) -> f64 {
        nominal_time(self.n)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or_else(|| 10.0 * self.nominal_time())
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.tau.min(0.05 * (self.n as f64).sqrt()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("n", "need at least one node"));
        }
        check_probability("p", self.p)?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be positive and finite, got {}", self.tau)));
        }
        let gamma = self.gamma();
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be positive and finite, got {gamma}")));
        }
        if self.marked >= self.n {
            return Err(Error::invalid("marked", format!("node {} out of range for n = {}", self.marked, self.n)));
        }
        if !self.site_energy.is_finite() {
            return Err(Error::invalid("site_energy", "must be finite"));
        }
        let t_max = self.t_max();
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::invalid("t_max", format!("must be positive and finite, got {t_max}")));
        }
        let dt = self.dt();
        if !(dt > 0.0 && dt <= self.tau) {
            return Err(Error::invalid("dt", format!("need 0 < dt <= tau, got dt = {dt}, tau = {}", self.tau)));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold <= 1.0) {
            return Err(Error::invalid("success_threshold", format!("must lie in (0, 1], got {}", self.success_threshold)));
        }
        Ok(())
    }

    /// Sample times: multiples of `dt`, the nominal search time (if inside the
    /// horizon) and the horizon itself.
    pub fn sample_times(&self) -> Vec<f64> {
        let t_max = self.t_max();
        let dt = self.dt();
        let eps = 1e-12 * t_max.max(1.0);
        let mut times: Vec<f64> = (0..).map(|k| k as f64 * dt).take_while(|&t| t <= t_max + eps).collect();
        let t_nom = self.nominal_time();
        if t_nom <= t_max {
            times.push(t_nom);
        }
        times.push(t_max);
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= eps);
        // the horizon and nominal time are kept exactly when a grid point lands next to them
        for exact in [t_nom, t_max] {
            if let Some(slot) = times.iter_mut().find(|t| (**t - exact).abs() <= eps) {
                *slot = exact;
            }
        }
        times
    }

    pub fn interval_count(&self) -> usize {
        let ratio = self.t_max() / self.tau;
        let rounded = ratio.round();
        let m = if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) { rounded } else { ratio.ceil() };
        (m as usize).max(1)
    }
}

/// `-E|w><w| - gamma A`.
pub fn build_search_hamiltonian(a: &AdjacencyMatrix, marked: usize, gamma: f64, energy: f64) -> Result<Hamiltonian> {
    build_search_hamiltonian_signed(a, marked, gamma, energy, SignConvention::Negative)
}

pub fn build_search_hamiltonian_signed(
    a: &AdjacencyMatrix,
    marked: usize,
    gamma: f64,
    energy: f64,
    sign: SignConvention,
) -> Result<Hamiltonian> {
    let n = a.n();
    if marked >= n {
        return Err(Error::invalid("marked", format!("node {marked} out of range for n = {n}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", format!("must be positive and finite, got {gamma}")));
    }
    let s = match sign {
        SignConvention::Negative => -1.0,
        SignConvention::Positive => 1.0,
    };
    if !energy.is_finite() {
        return Err(Error::invalid("site_energy", "must be finite"));
    }
    let mut m = a.matrix() * (s * gamma);
    m[(marked, marked)] += s * energy;
    Ok(Hamiltonian::from_symmetric_unchecked(m))
}

/// `-(|w><w| + |s><s|)`: the ensemble-averaged search generator.
pub fn mean_field_hamiltonian(n: usize, marked: usize) -> Result<Hamiltonian> {
    if marked >= n {
        return Err(Error::invalid("marked", format!("node {marked} out of range for n = {n}")));
    }
    let s = uniform_vector(n);
    let mut m: DMatrix<f64> = -(&s * s.transpose());
    m[(marked, marked)] -= 1.0;
    Hamiltonian::new(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub interval_count: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Success probability at a time that is on the sample grid.
    pub fn probability_at(&self, t: f64) -> Option<f64> {
        let eps = 1e-12 * t.abs().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= eps).map(|i| self.probabilities[i])
    }
}

/// Per-interval flop estimate: a dense symmetric eigensolve costs a few `n^3`,
/// each Taylor substep about fourteen sparse products of `nnz + n` work each.
fn prefer_spectral(stepper: &TaylorStepper, n: usize, segments: &[f64]) -> bool {
    let substeps: f64 = segments.iter().map(|&h| (stepper.radius() * h).ceil().max(1.0)).sum();
    let taylor = substeps * 14.0 * 4.0 * (stepper.nonzeros() + n) as f64;
    taylor > 6.0 * (n as f64).powi(3)
}

fn simulate<F>(cfg: &SearchConfig, mut graph_for: F, intervals: usize, interval_len: f64) -> Result<Trajectory>
where
    F: FnMut(usize) -> Result<AdjacencyMatrix>,
{
    cfg.validate()?;
    let n = cfg.n;
    let w = cfg.marked;
    let gamma = cfg.gamma();
    let t_max = cfg.t_max();
    let times = cfg.sample_times();
    let mut probabilities = Vec::with_capacity(times.len());
    probabilities.push(1.0 / n as f64);

    let mut psi = QuantumState::uniform(n);
    let mut next = 1;
    for j in 0..intervals {
        let start = j as f64 * interval_len;
        let end = if j + 1 == intervals { t_max } else { ((j + 1) as f64 * interval_len).min(t_max) };
        let first = next;
        while next < times.len() && (times[next] <= end || j + 1 == intervals) {
            next += 1;
        }
        let samples = &times[first..next];

        let a = graph_for(j)?;
        let h = build_search_hamiltonian_signed(&a, w, gamma, cfg.site_energy, cfg.sign)?;
        let stepper = TaylorStepper::new(&h);

        let mut segments = Vec::with_capacity(samples.len() + 1);
        let mut cursor = start;
        for &t in samples {
            segments.push(t - cursor);
            cursor = t;
        }
        if end > cursor {
            segments.push(end - cursor);
        }
        let spectral = match cfg.propagation {
            Propagation::Spectral => true,
            Propagation::Taylor => false,
            Propagation::Auto => prefer_spectral(&stepper, n, &segments),
        };

        if spectral {
            let spec = h.spectrum()?;
            let coeffs = spec.coefficients(&psi);
            for &t in samples {
                probabilities.push(spec.amplitude(&coeffs, w, t - start).norm_sqr());
            }
            psi = spec.evolve_coefficients(&coeffs, end - start);
        } else {
            let mut cursor = start;
            for &t in samples {
                psi = stepper.step(&psi, t - cursor);
                probabilities.push(psi.probability(w));
                cursor = t;
            }
            if end > cursor {
                psi = stepper.step(&psi, end - cursor);
            }
        }
        if !psi.norm().is_finite() {
            return Err(Error::Numerical(format!("state diverged in interval {j}")));
        }
    }
    debug_assert_eq!(probabilities.len(), times.len());
    Ok(Trajectory { times, probabilities, interval_count: intervals })
}

/// One realization of search on `G_temp(n, p, tau)`: a fresh G(n, p) is drawn
/// at the start of every interval of length `tau`, starting from `|s>`.
pub fn run_temporal_search(cfg: &SearchConfig, key: &StreamKey) -> Result<Trajectory> {
    cfg.validate()?;
    let (n, p) = (cfg.n, cfg.p);
    simulate(cfg, |j| sample_er_graph(n, p, &mut key.interval_rng(j as u64)), cfg.interval_count(), cfg.tau)
}

/// Search on one fixed graph for the whole horizon.
pub fn static_search(a: &AdjacencyMatrix, cfg: &SearchConfig) -> Result<Trajectory> {
    if a.n() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, found: a.n() });
    }
    let mut single = cfg.clone();
    single.propagation = Propagation::Spectral;
    simulate(&single, |_| Ok(a.clone()), 1, cfg.t_max())
}

/// `1 - P_w(pi sqrt(n) / 2)` for one realization.
pub fn error_at_nominal_time(cfg: &SearchConfig, key: &StreamKey) -> Result<f64> {
    let traj = run_temporal_search(cfg, key)?;
    nominal_error(cfg, &traj)
}

pub(crate) fn nominal_error(cfg: &SearchConfig, traj: &Trajectory) -> Result<f64> {
    let t = cfg.nominal_time();
    if cfg.t_max() < t {
        return Err(Error::invalid("t_max", format!("horizon {} is shorter than the nominal time {t}", cfg.t_max())));
    }
    let p = traj
        .probability_at(t)
        .ok_or_else(|| Error::Numerical("nominal time missing from the sample grid".into()))?;
    Ok(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// First time the success probability reaches the threshold.
    #[default]
    FirstCrossing,
    /// Time of the highest success probability within the horizon.
    GlobalMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningTime {
    /// `None` when the run is censored.
    pub value: Option<f64>,
    pub metric: Metric,
    pub peak_probability: f64,
    pub peak_time: f64,
}

impl RunningTime {
    pub fn is_censored(&self) -> bool {
        self.value.is_none()
    }
}

/// Samples within this of the maximum count as ties; the earliest wins.
pub const PEAK_TIE_TOLERANCE: f64 = 1e-9;

fn peak(traj: &Trajectory) -> (f64, f64) {
    let top = traj.probabilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    traj.times
        .iter()
        .zip(&traj.probabilities)
        .find(|(_, &p)| p >= top - PEAK_TIE_TOLERANCE)
        .map(|(&t, &p)| (t, p))
        .unwrap_or((0.0, top))
}

/// First crossing of `threshold`, linearly interpolated between samples.
pub fn running_time(traj: &Trajectory, threshold: f64) -> RunningTime {
    let (peak_time, peak_probability) = peak(traj);
    let mut value = None;
    for (i, &p) in traj.probabilities.iter().enumerate() {
        if p >= threshold {
            value = Some(if i == 0 {
                traj.times[0]
            } else {
                let (t0, p0) = (traj.times[i - 1], traj.probabilities[i - 1]);
                let t1 = traj.times[i];
                t0 + (threshold - p0) / (p - p0) * (t1 - t0)
            });
            break;
        }
    }
    RunningTime { value, metric: Metric::FirstCrossing, peak_probability, peak_time }
}

/// Earliest time of the global maximum of the sampled success probability,
/// up to [`PEAK_TIE_TOLERANCE`].
pub fn peak_running_time(traj: &Trajectory) -> RunningTime {
    let (peak_time, peak_probability) = peak(traj);
    RunningTime { value: Some(peak_time), metric: Metric::GlobalMax, peak_probability, peak_time }
}

pub fn running_time_with(traj: &Trajectory, threshold: f64, metric: Metric) -> RunningTime {
    match metric {
        Metric::FirstCrossing => running_time(traj, threshold),
        Metric::GlobalMax => peak_running_time(traj),
    }
}
