//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function has a plain-Rust twin returning `Result<_, String>`
//! so the logic can be tested natively.

use wasm_bindgen::prelude::*;

use temporal_search::ensemble::average_error;
use temporal_search::search::run_temporal_search;
use temporal_search::theory::{classify_regime, thresholds, Regime, TheoryConstants};
use temporal_search::{SearchConfig, StreamKey};

/// Interleaved `[t0, p0, t1, p1, ...]` for one realization.
pub fn trajectory_points(n: usize, p: f64, tau: f64, seed: u64, t_max: f64) -> Result<Vec<f64>, String> {
    let cfg = SearchConfig { t_max: Some(t_max), ..SearchConfig::new(n, p, tau) };
    let traj = run_temporal_search(&cfg, &StreamKey::single(seed)).map_err(|e| e.to_string())?;
    Ok(traj.times.iter().zip(&traj.probabilities).flat_map(|(&t, &q)| [t, q]).collect())
}

/// Mean error at the nominal time for each `tau`.
pub fn error_points(n: usize, p: f64, taus: &[f64], reps: usize, seed: u64) -> Result<Vec<f64>, String> {
    taus.iter()
        .map(|&tau| {
            let s = average_error(&SearchConfig::new(n, p, tau), reps, seed).map_err(|e| e.to_string())?;
            Ok(s.mean.unwrap_or(f64::NAN))
        })
        .collect()
}

fn log_axis(lo: f64, hi: f64, k: usize, count: usize) -> f64 {
    if count <= 1 {
        return lo;
    }
    (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (count - 1) as f64).exp()
}

/// Regime labels on a log-spaced grid, row-major with `p` increasing along
/// rows: 0 optimal, 1 suboptimal, 2 indeterminate.
pub fn regime_labels(
    n: f64,
    p_range: (f64, f64),
    tau_range: (f64, f64),
    cols: usize,
    rows: usize,
) -> Result<Vec<u8>, String> {
    let (p_lo, p_hi) = p_range;
    let (t_lo, t_hi) = tau_range;
    if !(n >= 2.0 && p_lo > 0.0 && p_lo <= p_hi && p_hi <= 1.0 && t_lo > 0.0 && t_lo <= t_hi) {
        return Err("need n >= 2, 0 < p_min <= p_max <= 1 and 0 < tau_min <= tau_max".into());
    }
    let mut out = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        let p = log_axis(p_lo, p_hi, r, rows);
        for c in 0..cols {
            let tau = log_axis(t_lo, t_hi, c, cols);
            out.push(match classify_regime(n, p, tau).label {
                Regime::Optimal => 0,
                Regime::Suboptimal => 1,
                Regime::Indeterminate => 2,
            });
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn trajectory(n: usize, p: f64, tau: f64, seed: u32, t_max: f64) -> Result<Vec<f64>, JsError> {
    trajectory_points(n, p, tau, seed.into(), t_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn error_curve(n: usize, p: f64, taus: Vec<f64>, reps: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    error_points(n, p, &taus, reps, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn regime_map(
    n: f64,
    p_min: f64,
    p_max: f64,
    tau_min: f64,
    tau_max: f64,
    cols: usize,
    rows: usize,
) -> Result<Vec<u8>, JsError> {
    regime_labels(n, (p_min, p_max), (tau_min, tau_max), cols, rows).map_err(|e| JsError::new(&e))
}

/// Thresholds for `(n, p)` as a JSON string.
#[wasm_bindgen]
pub fn thresholds_json(n: f64, p: f64) -> String {
    serde_json::to_string(&thresholds(n, p, &TheoryConstants::default())).unwrap_or_default()
}
