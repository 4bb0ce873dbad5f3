//! The realization-averaged one-interval channel
//! `Phi(rho) = sum_r p_r e^{-i H_r tau} rho e^{i H_r tau}` with
//! `H_r = |w><w| + gamma A_r`, evaluated exactly by enumerating every graph on
//! `n <= 6` nodes, estimated by sampling, and compared against the mean-field
//! channel `Phi_0` generated by `|w><w| + |s><s|`.
//!
//! Realization `r` is the `N`-bit integer whose bit `k` switches on the `k`-th
//! node pair in lexicographic order `(0,1), (0,2), ..., (n-2,n-1)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{spectral_propagator, trace_distance, DensityMatrix, Hamiltonian, C64};
use crate::graph::{check_probability, sample_er_graph, uniform_vector, AdjacencyMatrix};
use crate::par::map_indexed;
use crate::stream::StreamKey;

pub const MAX_ENUMERATION_NODES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub n: usize,
    pub p: f64,
    pub tau: f64,
    /// `1/(np)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub marked: usize,
}

impl ChannelSpec {
    pub fn new(n: usize, p: f64, tau: f64) -> Self {
        Self { n, p, tau, gamma: None, marked: 0 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| if self.p > 0.0 { 1.0 / (self.n as f64 * self.p) } else { 1.0 })
    }

    pub fn pairs(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    fn validate_common(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", "need at least two nodes"));
        }
        check_probability("p", self.p)?;
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be nonnegative and finite, got {}", self.tau)));
        }
        let g = self.gamma();
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be positive and finite, got {g}")));
        }
        if self.marked >= self.n {
            return Err(Error::invalid("marked", format!("node {} out of range for n = {}", self.marked, self.n)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n > MAX_ENUMERATION_NODES {
            return Err(Error::EnumerationGuard { n: self.n, limit: MAX_ENUMERATION_NODES });
        }
        self.validate_common()
    }
}

/// Graph number `index` in the enumeration order.
pub fn realization(n: usize, index: u64) -> AdjacencyMatrix {
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if index >> bit & 1 == 1 {
                edges.push((i, j));
            }
            bit += 1;
        }
    }
    AdjacencyMatrix::from_edges(n, &edges).expect("enumerated edges are in range")
}

/// `|w><w| + gamma A`.
pub fn realization_hamiltonian(a: &AdjacencyMatrix, marked: usize, gamma: f64) -> Result<Hamiltonian> {
    let mut m = a.matrix() * gamma;
    m[(marked, marked)] += 1.0;
    Hamiltonian::new(m)
}

/// Pairwise tree sum in index order, so the rounding pattern is fixed.
fn tree_sum(mut terms: Vec<DMatrix<C64>>) -> DMatrix<C64> {
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        terms = next;
    }
    terms.pop().expect("at least one term")
}

/// Exact channel with its propagators precomputed, for repeated application.
pub struct ExactChannel {
    spec: ChannelSpec,
    terms: Vec<Term>,
    weight_sum: f64,
}

type Term = (f64, DMatrix<C64>);

impl ExactChannel {
    pub fn new(spec: &ChannelSpec) -> Result<Self> {
        spec.validate()?;
        let pairs = spec.pairs();
        let count = 1usize << pairs;
        let (p, gamma) = (spec.p, spec.gamma());
        let built: Vec<Option<Result<Term>>> = map_indexed(count, None, |r| {
            let edges = (r as u64).count_ones() as i32;
            let weight = p.powi(edges) * (1.0 - p).powi(pairs as i32 - edges);
            if weight == 0.0 {
                return None;
            }
            let a = realization(spec.n, r as u64);
            Some(
                realization_hamiltonian(&a, spec.marked, gamma)
                    .and_then(|h| spectral_propagator(&h, spec.tau))
                    .map(|u| (weight, u)),
            )
        });
        let terms = built.into_iter().flatten().collect::<Result<Vec<_>>>()?;
        let weight_sum = terms.iter().map(|(w, _)| w).sum();
        Ok(Self { spec: *spec, terms, weight_sum })
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    /// Number of realizations with nonzero probability.
    pub fn support(&self) -> usize {
        self.terms.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.spec.n {
            return Err(Error::DimensionMismatch { expected: self.spec.n, found: rho.dim() });
        }
        let parts = map_indexed(self.terms.len(), None, |k| {
            let (w, u) = &self.terms[k];
            rho.conjugate(u).matrix() * C64::new(*w, 0.0)
        });
        Ok(DensityMatrix::from_matrix_unchecked(tree_sum(parts)))
    }

    pub fn apply_n(&self, rho: &DensityMatrix, steps: usize) -> Result<DensityMatrix> {
        let mut out = rho.clone();
        for _ in 0..steps {
            out = self.apply(&out)?;
        }
        Ok(out)
    }
}

pub fn exact_channel_step(rho: &DensityMatrix, spec: &ChannelSpec) -> Result<DensityMatrix> {
    ExactChannel::new(spec)?.apply(rho)
}

/// Sample mean of `e^{-i H_r tau} rho e^{i H_r tau}` over `samples` graphs;
/// sample `k` draws its graph from realization `k` of `master_seed`.
pub fn mc_channel_step(rho: &DensityMatrix, spec: &ChannelSpec, samples: usize, master_seed: u64) -> Result<DensityMatrix> {
    spec.validate_common()?;
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    if rho.dim() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, found: rho.dim() });
    }
    let base = StreamKey::single(master_seed);
    let gamma = spec.gamma();
    let parts = map_indexed(samples, None, |k| -> Result<DMatrix<C64>> {
        let a = sample_er_graph(spec.n, spec.p, &mut base.with_realization(k as u64).interval_rng(0))?;
        let u = spectral_propagator(&realization_hamiltonian(&a, spec.marked, gamma)?, spec.tau)?;
        Ok(rho.conjugate(&u).matrix().clone())
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let sum = tree_sum(parts) * C64::new(1.0 / samples as f64, 0.0);
    Ok(DensityMatrix::from_matrix_unchecked(sum))
}

/// `|w><w| + |s><s|`.
pub fn mean_field_generator(n: usize, marked: usize) -> Result<Hamiltonian> {
    if marked >= n {
        return Err(Error::invalid("marked", format!("node {marked} out of range for n = {n}")));
    }
    let s = uniform_vector(n);
    let mut m = &s * s.transpose();
    m[(marked, marked)] += 1.0;
    Hamiltonian::new(m)
}

/// `Phi_0`: unitary conjugation under the mean-field generator.
pub struct MeanFieldChannel {
    u: DMatrix<C64>,
}

impl MeanFieldChannel {
    pub fn new(n: usize, tau: f64, marked: usize) -> Result<Self> {
        Ok(Self { u: spectral_propagator(&mean_field_generator(n, marked)?, tau)? })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.u.nrows() {
            return Err(Error::DimensionMismatch { expected: self.u.nrows(), found: rho.dim() });
        }
        Ok(rho.conjugate(&self.u))
    }
}

pub fn phi0_step(rho: &DensityMatrix, n: usize, tau: f64, marked: usize) -> Result<DensityMatrix> {
    MeanFieldChannel::new(n, tau, marked)?.apply(rho)
}

/// Raw moments `E[X^j]`, `j = 0..=order`, of `X ~ Binomial(trials, p)`:
/// `E[X^j] = sum_i S(j, i) trials^(i) p^i` with Stirling numbers of the
/// second kind and falling factorials.
pub fn binomial_raw_moments(trials: usize, p: f64, order: usize) -> Vec<f64> {
    let mut stirling = vec![vec![0.0_f64; order + 1]; order + 1];
    stirling[0][0] = 1.0;
    for j in 1..=order {
        for i in 1..=j {
            stirling[j][i] = i as f64 * stirling[j - 1][i] + stirling[j - 1][i - 1];
        }
    }
    // trials^(i) p^i
    let mut falling = vec![1.0_f64; order + 1];
    for i in 1..=order {
        falling[i] = falling[i - 1] * (trials as f64 - (i - 1) as f64).max(0.0) * p;
    }
    (0..=order).map(|j| (0..=j).map(|i| stirling[j][i] * falling[i]).sum()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationBound {
    /// `sum_{k=2}^{k_max} tau^k/k! <(1 + gamma l)^k>`, `l ~ Binomial(N, p)`.
    pub value: f64,
    /// Certified upper bound on the omitted terms `k > k_max`;
    /// infinite when no geometric certificate exists.
    pub tail: f64,
    /// Terms were decreasing at `k_max` and the tail is certified.
    pub converged: bool,
    pub k_max: usize,
}

pub const DEFAULT_K_MAX: usize = 20;

/// Series bound on the one-step distance between `Phi` and `Phi_0`, from
/// `||A_G|| <= |E(G)|` and exact binomial moments of the edge count.
pub fn truncation_bound(spec: &ChannelSpec, k_max: usize) -> Result<TruncationBound> {
    spec.validate_common()?;
    if k_max < 2 {
        return Err(Error::invalid("k_max", "series cutoff must be at least 2"));
    }
    let pairs = spec.pairs();
    let gamma = spec.gamma();
    let tau = spec.tau;
    let raw = binomial_raw_moments(pairs, spec.p, k_max);

    let mut binom = vec![1.0_f64];
    let mut factorial = 1.0_f64;
    let mut terms = Vec::with_capacity(k_max + 1);
    for k in 1..=k_max {
        // row k of Pascal's triangle
        let mut row = vec![1.0; k + 1];
        for j in 1..k {
            row[j] = binom[j - 1] + binom[j];
        }
        binom = row;
        factorial *= k as f64;
        let moment: f64 = (0..=k).map(|j| binom[j] * gamma.powi(j as i32) * raw[j]).sum();
        terms.push(tau.powi(k as i32) / factorial * moment);
    }
    let value: f64 = terms[1..].iter().sum();
    let last = terms[k_max - 1];
    let prev = terms[k_max - 2];
    // (1 + gamma l)^{k+1} <= (1 + gamma N)(1 + gamma l)^k bounds consecutive ratios
    let ratio = tau * (1.0 + gamma * pairs as f64) / (k_max + 1) as f64;
    let tail = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { f64::INFINITY };
    let decreasing = last <= prev || last == 0.0;
    Ok(TruncationBound { value, tail, converged: decreasing && tail.is_finite(), k_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiStepError {
    pub steps: usize,
    /// Trace distance between `Phi^m(rho)` and `Phi_0^m(rho)`.
    pub true_error: f64,
    /// `m` times the one-step truncation bound.
    pub bound: f64,
    pub dominated: bool,
}

/// Errors after each of `1..=steps` applications, sharing one channel build.
pub fn multi_step_errors(rho0: &DensityMatrix, spec: &ChannelSpec, steps: usize, k_max: usize) -> Result<Vec<MultiStepError>> {
    if steps == 0 {
        return Err(Error::invalid("m", "need at least one step"));
    }
    let exact = ExactChannel::new(spec)?;
    let mean_field = MeanFieldChannel::new(spec.n, spec.tau, spec.marked)?;
    let delta = truncation_bound(spec, k_max)?.value;
    let (mut a, mut b) = (rho0.clone(), rho0.clone());
    let mut out = Vec::with_capacity(steps);
    for m in 1..=steps {
        a = exact.apply(&a)?;
        b = mean_field.apply(&b)?;
        let true_error = trace_distance(&a, &b)?;
        let bound = m as f64 * delta;
        out.push(MultiStepError { steps: m, true_error, bound, dominated: true_error <= bound });
    }
    Ok(out)
}

pub fn multi_step_error(rho0: &DensityMatrix, spec: &ChannelSpec, steps: usize) -> Result<MultiStepError> {
    Ok(*multi_step_errors(rho0, spec, steps, DEFAULT_K_MAX)?.last().expect("steps >= 1"))
}
