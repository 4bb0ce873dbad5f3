//! CSV and JSON exchange formats.
//!
//! Floats are written with the shortest representation that parses back to
//! the same `f64`, so identical runs give byte-identical files. Missing values
//! (censored means, failed points) are written as `NaN`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::{SweepResult, SweepSpec};
use crate::error::{Error, Result};
use crate::evolution::{DensityMatrix, C64};
use crate::search::Trajectory;

pub const TRAJECTORY_HEADER: &str = "t,p_success";
pub const SWEEP_HEADER: &str = "tau,p,mean_rt,stderr_rt,censored,mean_err,stderr_err,reps";

/// Shortest round-trip formatting.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), format_f64)
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(32 * traj.len() + 16);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, p) in traj.times.iter().zip(&traj.probabilities) {
        let _ = writeln!(out, "{},{}", format_f64(*t), format_f64(*p));
    }
    out
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_f64(r.tau),
            format_f64(r.p),
            format_opt(r.running_time.mean),
            format_opt(r.running_time.stderr),
            r.running_time.censored,
            format_opt(r.error.mean),
            format_opt(r.error.stderr),
            r.running_time.reps,
        );
    }
    out
}

fn csv_rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => return Err(Error::invalid("csv", format!("expected header {header:?}, found {other:?}"))),
    }
    Ok(lines.enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 2, l.split(',').collect())))
}

fn parse_field(line: usize, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::invalid("csv", format!("line {line}: cannot parse {s:?} as a number")))
}

pub fn parse_trajectory_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut times = Vec::new();
    let mut probabilities = Vec::new();
    for (line, fields) in csv_rows(text, TRAJECTORY_HEADER)? {
        if fields.len() != 2 {
            return Err(Error::invalid("csv", format!("line {line}: expected 2 fields, found {}", fields.len())));
        }
        times.push(parse_field(line, fields[0])?);
        probabilities.push(parse_field(line, fields[1])?);
    }
    Ok((times, probabilities))
}

/// One parsed row of a sweep CSV; missing values come back as `NaN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCsvRow {
    pub tau: f64,
    pub p: f64,
    pub mean_rt: f64,
    pub stderr_rt: f64,
    pub censored: usize,
    pub mean_err: f64,
    pub stderr_err: f64,
    pub reps: usize,
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepCsvRow>> {
    let mut rows = Vec::new();
    for (line, f) in csv_rows(text, SWEEP_HEADER)? {
        if f.len() != 8 {
            return Err(Error::invalid("csv", format!("line {line}: expected 8 fields, found {}", f.len())));
        }
        let count = |s: &str| {
            s.trim().parse::<usize>().map_err(|_| Error::invalid("csv", format!("line {line}: bad count {s:?}")))
        };
        rows.push(SweepCsvRow {
            tau: parse_field(line, f[0])?,
            p: parse_field(line, f[1])?,
            mean_rt: parse_field(line, f[2])?,
            stderr_rt: parse_field(line, f[3])?,
            censored: count(f[4])?,
            mean_err: parse_field(line, f[5])?,
            stderr_err: parse_field(line, f[6])?,
            reps: count(f[7])?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub tau: f64,
    pub p: f64,
    pub message: String,
}

/// Provenance written next to a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub version: String,
    pub spec: SweepSpec,
    pub total_censored: usize,
    pub failures: Vec<PointFailure>,
}

impl SweepSidecar {
    pub fn new(spec: &SweepSpec, result: &SweepResult) -> Self {
        Self {
            version: crate::VERSION.to_string(),
            spec: spec.clone(),
            total_censored: result.total_censored(),
            failures: result
                .failures()
                .map(|r| PointFailure { tau: r.tau, p: r.p, message: r.failure.clone().unwrap_or_default() })
                .collect(),
        }
    }
}

/// Row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&DensityMatrix> for DensityMatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let n = m.nrows();
        let entries = (0..n).flat_map(|i| (0..n).map(move |j| [m[(i, j)].re, m[(i, j)].im])).collect();
        Self { n, entries }
    }
}

impl DensityMatrixJson {
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        if self.entries.len() != self.n * self.n {
            return Err(Error::DimensionMismatch { expected: self.n * self.n, found: self.entries.len() });
        }
        let m = DMatrix::from_fn(self.n, self.n, |i, j| {
            let [re, im] = self.entries[i * self.n + j];
            C64::new(re, im)
        });
        DensityMatrix::new(m)
    }
}
