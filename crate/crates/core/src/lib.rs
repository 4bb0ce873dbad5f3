//! Quantum spatial search by continuous-time quantum walk on random temporal
//! networks: sequences of Erdős–Rényi graphs G(n, p), each replaced by a fresh
//! sample after a time interval `tau`.
//!
//! * [`graph`]: sampling and spectral statistics of G(n, p).
//! * [`evolution`]: exact propagation of states and density matrices.
//! * [`search`]: search Hamiltonians, single temporal realizations, running times.
//! * [`ensemble`]: Monte-Carlo averages and parameter sweeps.
//! * [`channel`]: the realization-averaged one-interval channel at tiny `n`.
//! * [`theory`]: closed-form thresholds and the regime classifier.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod io;
mod par;
pub mod search;
pub mod stats;
pub mod stream;
pub mod theory;

pub use error::{Error, Result};
pub use search::{Metric, SearchConfig, Trajectory};
pub use stream::StreamKey;

/// Crate version, recorded in every output manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
