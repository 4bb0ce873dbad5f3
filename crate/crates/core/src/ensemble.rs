//! Monte-Carlo averages over temporal-network realizations and sweeps over
//! `(tau, p)`.
//!
//! Realization `i` of the point `(tau, p)` draws from the stream
//! `(master_seed, point_key(tau, p), i)`, so the numbers for a point do not
//! depend on which other points are swept, on their order, or on the number
//! of worker threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::check_probability;
use crate::par::map_indexed;
use crate::search::{nominal_error, peak_running_time, run_temporal_search, running_time, Metric, SearchConfig};
use crate::stats::mean_stderr;
use crate::stream::{point_key, StreamKey};

/// Mean and standard error over the uncensored values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Absent when every value is censored.
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub censored: usize,
    pub reps: usize,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Self {
        let kept: Vec<f64> = values.iter().flatten().copied().collect();
        let ms = mean_stderr(&kept);
        Self {
            mean: ms.map(|m| m.0),
            stderr: ms.map(|m| m.1),
            censored: values.len() - kept.len(),
            reps: values.len(),
        }
    }

    fn failed(reps: usize) -> Self {
        Self { mean: None, stderr: None, censored: 0, reps }
    }
}

/// Everything recorded from one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub first_crossing: Option<f64>,
    pub peak_time: f64,
    pub peak_probability: f64,
    /// `1 - P_w(T)`; absent when the horizon stops short of `T`.
    pub error: Option<f64>,
}

impl Realization {
    pub fn running_time(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::FirstCrossing => self.first_crossing,
            Metric::GlobalMax => Some(self.peak_time),
        }
    }
}

pub fn run_realization(cfg: &SearchConfig, key: &StreamKey) -> Result<Realization> {
    let traj = run_temporal_search(cfg, key)?;
    let peak = peak_running_time(&traj);
    let error = if cfg.t_max() >= cfg.nominal_time() { Some(nominal_error(cfg, &traj)?) } else { None };
    Ok(Realization {
        first_crossing: running_time(&traj, cfg.success_threshold).value,
        peak_time: peak.peak_time,
        peak_probability: peak.peak_probability,
        error,
    })
}

/// Stream key for realization `index` of the point `(cfg.tau, cfg.p)`.
pub fn realization_key(cfg: &SearchConfig, master_seed: u64, index: usize) -> StreamKey {
    StreamKey::new(master_seed, point_key(cfg.tau, cfg.p), index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub tau: f64,
    pub p: f64,
    pub realizations: Vec<Realization>,
    pub running_time: Summary,
    pub error: Summary,
}

impl PointResult {
    fn from_realizations(cfg: &SearchConfig, metric: Metric, realizations: Vec<Realization>) -> Self {
        let rt: Vec<Option<f64>> = realizations.iter().map(|r| r.running_time(metric)).collect();
        let err: Vec<Option<f64>> = realizations.iter().map(|r| r.error).collect();
        Self { tau: cfg.tau, p: cfg.p, running_time: Summary::of(&rt), error: Summary::of(&err), realizations }
    }

    pub fn running_times(&self, metric: Metric) -> Vec<Option<f64>> {
        self.realizations.iter().map(|r| r.running_time(metric)).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.realizations.iter().filter_map(|r| r.error).collect()
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::invalid("reps", "need at least one realization"));
    }
    Ok(())
}

/// All statistics for one configuration; `workers = None` uses every core.
pub fn ensemble_point(
    cfg: &SearchConfig,
    metric: Metric,
    reps: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<PointResult> {
    check_reps(reps)?;
    cfg.validate()?;
    let runs = map_indexed(reps, workers, |i| run_realization(cfg, &realization_key(cfg, master_seed, i)));
    let realizations = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PointResult::from_realizations(cfg, metric, realizations))
}

pub fn average_running_time(cfg: &SearchConfig, metric: Metric, reps: usize, master_seed: u64) -> Result<Summary> {
    Ok(ensemble_point(cfg, metric, reps, master_seed, None)?.running_time)
}

/// Ensemble mean of `1 - P_w(pi sqrt(n) / 2)`.
pub fn average_error(cfg: &SearchConfig, reps: usize, master_seed: u64) -> Result<Summary> {
    if cfg.t_max() < cfg.nominal_time() {
        return Err(Error::invalid(
            "t_max",
            format!("horizon {} is shorter than the nominal time {}", cfg.t_max(), cfg.nominal_time()),
        ));
    }
    let mut probe = cfg.clone();
    // only the horizon up to T matters for the error
    probe.t_max = Some(cfg.nominal_time());
    Ok(ensemble_point(&probe, Metric::GlobalMax, reps, master_seed, None)?.error)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Template for every point; its `tau` and `p` are replaced per point and
    /// an absent `gamma` stays `1/(np)` per point.
    pub base: SearchConfig,
    pub tau_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub reps: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub metric: Metric,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_reps(self.reps)?;
        if self.tau_values.is_empty() {
            return Err(Error::invalid("tau_values", "empty"));
        }
        if self.p_values.is_empty() {
            return Err(Error::invalid("p_values", "empty"));
        }
        if let Some(t) = self.tau_values.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::invalid("tau_values", format!("every tau must be positive and finite, got {t}")));
        }
        for &p in &self.p_values {
            check_probability("p_values", p)?;
        }
        Ok(())
    }

    /// Points ordered by `(p, tau)`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut ps = self.p_values.clone();
        let mut taus = self.tau_values.clone();
        ps.sort_by(f64::total_cmp);
        taus.sort_by(f64::total_cmp);
        ps.iter().flat_map(|&p| taus.iter().map(move |&tau| (tau, p))).collect()
    }

    pub fn config_for(&self, tau: f64, p: f64) -> SearchConfig {
        SearchConfig { tau, p, ..self.base.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub p: f64,
    pub running_time: Summary,
    pub error: Summary,
    /// Set when the point could not be evaluated; its summaries are then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn total_censored(&self) -> usize {
        self.rows.iter().map(|r| r.running_time.censored).sum()
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.failure.is_some())
    }

    pub fn row(&self, tau: f64, p: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.tau == tau && r.p == p)
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    sweep_with_workers(spec, None)
}

/// Evaluates every `(tau, p)` point. A point that fails is recorded in its
/// row and the sweep carries on; only an invalid spec aborts.
pub fn sweep_with_workers(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let points = spec.points();
    let configs: Vec<SearchConfig> = points.iter().map(|&(tau, p)| spec.config_for(tau, p)).collect();
    let invalid: Vec<Option<String>> = configs.iter().map(|c| c.validate().err().map(|e| e.to_string())).collect();

    // one task per realization of every valid point, merged back by index
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .filter(|&k| invalid[k].is_none())
        .flat_map(|k| (0..spec.reps).map(move |i| (k, i)))
        .collect();
    let outcomes = map_indexed(tasks.len(), workers, |t| {
        let (k, i) = tasks[t];
        run_realization(&configs[k], &realization_key(&configs[k], spec.master_seed, i))
    });

    let mut per_point: Vec<Vec<Result<Realization>>> = (0..points.len()).map(|_| Vec::new()).collect();
    for (&(k, _), out) in tasks.iter().zip(outcomes) {
        per_point[k].push(out);
    }

    let rows = points
        .iter()
        .zip(configs.iter().zip(invalid))
        .zip(per_point)
        .map(|((&(tau, p), (cfg, invalid)), outs)| {
            let failed = |msg: String| SweepRow {
                tau,
                p,
                running_time: Summary::failed(spec.reps),
                error: Summary::failed(spec.reps),
                failure: Some(msg),
            };
            if let Some(msg) = invalid {
                return failed(msg);
            }
            match outs.into_iter().collect::<Result<Vec<_>>>() {
                Ok(realizations) => {
                    let point = PointResult::from_realizations(cfg, spec.metric, realizations);
                    SweepRow { tau, p, running_time: point.running_time, error: point.error, failure: None }
                }
                Err(e) => failed(e.to_string()),
            }
        })
        .collect();
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            base: SearchConfig { t_max: Some(12.0), ..SearchConfig::new(16, 0.3, 1.0) },
            tau_values: vec![2.0, 0.3],
            p_values: vec![0.5, 0.2],
            reps: 4,
            master_seed: 21,
            metric: Metric::FirstCrossing,
        }
    }

    #[test]
    fn summary_of_censored_values() {
        let s = Summary::of(&[Some(1.0), None, Some(3.0)]);
        assert_eq!((s.mean, s.censored, s.reps), (Some(2.0), 1, 3));
        assert_eq!(s.stderr, Some(1.0));
        let s = Summary::of(&[None, None]);
        assert_eq!((s.mean, s.stderr, s.censored), (None, None, 2));
    }

    #[test]
    fn complete_graph_has_no_spread() {
        let cfg = SearchConfig::new(64, 1.0, 0.7);
        let rt = average_running_time(&cfg, Metric::GlobalMax, 3, 5).unwrap();
        assert_eq!(rt.stderr, Some(0.0));
        let err = average_error(&cfg, 3, 5).unwrap();
        assert_eq!(err.stderr, Some(0.0));
        assert!(err.mean.unwrap() <= 5.0 / 64.0);
    }

    #[test]
    fn error_needs_nominal_time_in_horizon() {
        let cfg = SearchConfig { t_max: Some(2.0), ..SearchConfig::new(64, 0.5, 0.7) };
        assert!(average_error(&cfg, 2, 0).is_err());
        assert!(average_running_time(&cfg, Metric::GlobalMax, 0, 0).is_err());
    }

    #[test]
    fn single_point_single_rep_is_one_run() {
        let spec = SweepSpec { tau_values: vec![0.4], p_values: vec![0.25], reps: 1, ..small_spec() };
        let res = sweep(&spec).unwrap();
        let cfg = spec.config_for(0.4, 0.25);
        let traj = run_temporal_search(&cfg, &StreamKey::new(21, point_key(0.4, 0.25), 0)).unwrap();
        let row = &res.rows[0];
        assert_eq!(row.running_time.mean, running_time(&traj, 0.5).value);
        assert_eq!(row.error.mean, Some(1.0 - traj.probability_at(cfg.nominal_time()).unwrap()));
    }

    #[test]
    fn rows_ordered_by_p_then_tau() {
        let res = sweep(&small_spec()).unwrap();
        let order: Vec<(f64, f64)> = res.rows.iter().map(|r| (r.p, r.tau)).collect();
        assert_eq!(order, vec![(0.2, 0.3), (0.2, 2.0), (0.5, 0.3), (0.5, 2.0)]);
        assert_eq!(res.total_censored(), res.rows.iter().map(|r| r.running_time.censored).sum::<usize>());
        for r in &res.rows {
            assert!(r.running_time.censored <= r.running_time.reps);
            assert!(r.running_time.stderr.is_none_or(|s| s >= 0.0));
        }
    }

    #[test]
    fn points_are_independent_of_the_rest_of_the_sweep() {
        let full = sweep(&small_spec()).unwrap();
        let alone = sweep(&SweepSpec { tau_values: vec![2.0], p_values: vec![0.5], ..small_spec() }).unwrap();
        assert_eq!(full.row(2.0, 0.5), alone.row(2.0, 0.5));
        let cfg = small_spec().config_for(2.0, 0.5);
        let point = average_running_time(&cfg, Metric::FirstCrossing, 4, 21).unwrap();
        assert_eq!(full.row(2.0, 0.5).unwrap().running_time, point);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let spec = small_spec();
        let a = sweep_with_workers(&spec, Some(1)).unwrap();
        let b = sweep_with_workers(&spec, Some(3)).unwrap();
        let c = sweep_with_workers(&spec, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn bad_point_is_recorded_in_row() {
        let mut spec = small_spec();
        spec.base.dt = Some(0.5);
        let res = sweep(&spec).unwrap();
        let bad: Vec<f64> = res.failures().map(|r| r.tau).collect();
        assert_eq!(bad, vec![0.3, 0.3]);
        assert!(res.failures().all(|r| r.failure.as_ref().unwrap().contains("`dt`") && r.running_time.mean.is_none()));
        assert!(res.row(2.0, 0.2).unwrap().failure.is_none());
    }

    #[test]
    fn spec_validation() {
        assert!(sweep(&SweepSpec { reps: 0, ..small_spec() }).unwrap_err().is_validation());
        assert!(sweep(&SweepSpec { tau_values: vec![-1.0], ..small_spec() }).is_err());
        assert!(sweep(&SweepSpec { p_values: vec![1.5], ..small_spec() }).is_err());
        assert!(sweep(&SweepSpec { p_values: vec![], ..small_spec() }).is_err());
    }

    #[test]
    fn error_rises_then_falls_around_unit_tau() {
        let at = |tau| {
            let cfg = SearchConfig::new(200, 0.1, tau);
            average_error(&cfg, 10, 8).unwrap().mean.unwrap()
        };
        let (fast, mid, slow) = (at(0.1), at(1.0), at(10.0));
        assert!(fast < mid, "{fast} vs {mid}");
        assert!(slow < mid, "{slow} vs {mid}");
    }

    #[test]
    fn spec_json() {
        let json = r#"{"base": {"n": 30, "p": 0.1, "tau": 1.0}, "tau_values": [0.5, 1.0],
                       "p_values": [0.1], "reps": 3, "master_seed": 9, "metric": "global_max"}"#;
        let spec: SweepSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.metric, Metric::GlobalMax);
        let back: SweepSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
