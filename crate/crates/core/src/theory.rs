//! Closed-form optimality thresholds and the `(p, tau)` regime map.
//!
//! All logarithms are natural. Every asymptotic constant defaults to 1 and
//! can be overridden through [`TheoryConstants`]; the `margin` reported by the
//! classifier says how far inside its region a point sits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub tau_fast: f64,
    pub tau_slow: f64,
    pub low_p: f64,
}

impl Default for TheoryConstants {
    fn default() -> Self {
        Self { tau_fast: 1.0, tau_slow: 1.0, low_p: 1.0 }
    }
}

/// `ln(n)^{3/2} / n`: search on a single G(n, p) is optimal above this.
pub fn p_static(n: f64) -> f64 {
    n.ln().powf(1.5) / n
}

/// `ln(n) / sqrt(n)`: search is optimal for every `tau` above this.
pub fn p_temp(n: f64) -> f64 {
    n.ln() / n.sqrt()
}

pub fn tau_fast(n: f64, p: f64) -> f64 {
    tau_fast_with(n, p, 1.0)
}

pub fn tau_slow(n: f64, p: f64) -> f64 {
    tau_slow_with(n, p, 1.0)
}

/// `c p sqrt(n) / ln(n)`
pub fn tau_fast_with(n: f64, p: f64, c: f64) -> f64 {
    c * p * n.sqrt() / n.ln()
}

/// `c ln(n) / (p sqrt(n))`
pub fn tau_slow_with(n: f64, p: f64, c: f64) -> f64 {
    c * n.ln() / (p * n.sqrt())
}

/// Average-error scaling for `p >= p_static`: `C tau / (p sqrt n)` below
/// `tau = 1`, `C / (p tau sqrt n)` from there on.
pub fn error_bound(n: f64, p: f64, tau: f64, c: f64) -> f64 {
    let base = c / (p * n.sqrt());
    if tau < 1.0 {
        base * tau
    } else {
        base / tau
    }
}

/// Which inequality decided a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// `p >= p_temp`
    PTemp,
    /// `tau <= tau_fast` (or its violation)
    TauFast,
    /// `tau >= tau_slow` (or its violation)
    TauSlow,
    /// `p < 1/n^2`: `tau < p / (sqrt(n) ln n)`
    LowPVerySparse,
    /// `1/n^2 <= p <= ln(n)/n`: `tau < 1 / (n^{5/2} ln n)`
    LowPSparse,
    /// `ln(n)/n < p < p_static`: `tau < 1 / (sqrt(n) ln n)`
    LowPNearStatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowPThreshold {
    pub tau: f64,
    pub branch: Threshold,
}

/// Upper bound on `tau` guaranteeing optimal search below `p_static`.
///
/// The three branches do not join continuously.
pub fn tau_threshold_low_p(n: f64, p: f64) -> Result<LowPThreshold> {
    tau_threshold_low_p_with(n, p, 1.0)
}

pub fn tau_threshold_low_p_with(n: f64, p: f64, c: f64) -> Result<LowPThreshold> {
    let ps = p_static(n);
    if !(p > 0.0 && p < ps) {
        return Err(Error::invalid("p", format!("low-p threshold needs 0 < p < p_static = {ps}, got {p}")));
    }
    let ln = n.ln();
    let (tau, branch) = if p < 1.0 / (n * n) {
        (p / (n.sqrt() * ln), Threshold::LowPVerySparse)
    } else if p <= ln / n {
        (1.0 / (n.powf(2.5) * ln), Threshold::LowPSparse)
    } else {
        (1.0 / (n.sqrt() * ln), Threshold::LowPNearStatic)
    };
    Ok(LowPThreshold { tau: c * tau, branch })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Optimal,
    Suboptimal,
    /// No guarantee either way.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub label: Regime,
    pub active_threshold: Threshold,
    /// Ratio to the deciding threshold, oriented so that `margin > 1` means
    /// strictly inside the labelled region.
    pub margin: f64,
}

pub fn classify_regime(n: f64, p: f64, tau: f64) -> RegimeVerdict {
    classify_regime_with(n, p, tau, &TheoryConstants::default())
}

pub fn classify_regime_with(n: f64, p: f64, tau: f64, c: &TheoryConstants) -> RegimeVerdict {
    let pt = p_temp(n);
    if p >= pt {
        return RegimeVerdict { label: Regime::Optimal, active_threshold: Threshold::PTemp, margin: p / pt };
    }
    if p >= p_static(n) {
        let fast = tau_fast_with(n, p, c.tau_fast);
        let slow = tau_slow_with(n, p, c.tau_slow);
        return if tau <= fast {
            RegimeVerdict { label: Regime::Optimal, active_threshold: Threshold::TauFast, margin: fast / tau }
        } else if tau >= slow {
            RegimeVerdict { label: Regime::Optimal, active_threshold: Threshold::TauSlow, margin: tau / slow }
        } else {
            let (to_fast, to_slow) = (tau / fast, slow / tau);
            let (margin, active_threshold) =
                if to_fast <= to_slow { (to_fast, Threshold::TauFast) } else { (to_slow, Threshold::TauSlow) };
            RegimeVerdict { label: Regime::Suboptimal, active_threshold, margin }
        };
    }
    let low = tau_threshold_low_p_with(n, p, c.low_p).expect("0 < p < p_static checked above");
    let margin = low.tau / tau;
    let label = if tau <= low.tau { Regime::Optimal } else { Regime::Indeterminate };
    RegimeVerdict { label, active_threshold: low.branch, margin }
}

/// Every threshold that applies at `(n, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub n: f64,
    pub p: f64,
    pub p_static: f64,
    pub p_temp: f64,
    pub tau_fast: f64,
    pub tau_slow: f64,
    pub tau_low_p: Option<LowPThreshold>,
}

pub fn thresholds(n: f64, p: f64, c: &TheoryConstants) -> Thresholds {
    Thresholds {
        n,
        p,
        p_static: p_static(n),
        p_temp: p_temp(n),
        tau_fast: tau_fast_with(n, p, c.tau_fast),
        tau_slow: tau_slow_with(n, p, c.tau_slow),
        tau_low_p: tau_threshold_low_p_with(n, p, c.low_p).ok(),
    }
}
