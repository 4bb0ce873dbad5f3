//! Erdős–Rényi sampling and the spectral quantities used to reason about
//! search on a single random graph.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};

/// Symmetric, hollow 0/1 adjacency matrix of one static graph.
///
/// Entries are stored as `f64` so the matrix can be fed straight into a
/// Hamiltonian without conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    entries: DMatrix<f64>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self { entries: DMatrix::zeros(n, n) }
    }

    pub fn complete(n: usize) -> Self {
        Self { entries: DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }) }
    }

    /// Builds a graph from an undirected edge list. Self-loops are rejected;
    /// repeated edges collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut entries = DMatrix::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid("edges", format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::invalid("edges", format!("self-loop at node {i}")));
            }
            entries[(i, j)] = 1.0;
            entries[(j, i)] = 1.0;
        }
        Ok(Self { entries })
    }

    /// Validates an arbitrary matrix against the adjacency invariants.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: entries.ncols() });
        }
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(Error::invalid("entries", format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = entries[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::invalid("entries", format!("entry ({i}, {j}) = {v} is not 0/1")));
                }
                if v != entries[(j, i)] {
                    return Err(Error::invalid("entries", format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.entries[(i, j)] != 0.0
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n())
            .map(|i| self.entries.row(i).iter().filter(|&&v| v != 0.0).count())
            .collect()
    }

    /// One `"i j"` line per edge, 0-indexed, ascending.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub edge_count: usize,
    pub max_degree: usize,
    pub spectral_norm: f64,
}

pub(crate) fn check_probability(field: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(field, format!("{p} is outside [0, 1]")));
    }
    Ok(())
}

/// Samples G(n, p): each unordered pair, visited in lexicographic order, is
/// an edge independently with probability `p`.
pub fn sample_er_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<AdjacencyMatrix> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one node"));
    }
    check_probability("p", p)?;
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                entries[(i, j)] = 1.0;
                entries[(j, i)] = 1.0;
            }
        }
    }
    Ok(AdjacencyMatrix { entries })
}

pub fn graph_stats(a: &AdjacencyMatrix) -> GraphStats {
    let spectral_norm = if a.n() == 0 {
        0.0
    } else {
        a.matrix()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    };
    GraphStats {
        edge_count: a.edge_count(),
        max_degree: a.degrees().into_iter().max().unwrap_or(0),
        spectral_norm,
    }
}

/// `B = A - np|s><s| + pI`, i.e. `A - pJ + pI`. The diagonal is exactly zero.
pub fn centered_fluctuation_matrix(a: &AdjacencyMatrix, p: f64) -> Result<DMatrix<f64>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("centering needs 0 < p < 1, got {p}")));
    }
    let n = a.n();
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { a.matrix()[(i, j)] - p }))
}

pub fn uniform_vector(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0 / (n as f64).sqrt())
}

/// Squared overlap of the uniform state with the top eigenspace of `A`.
///
/// When the largest eigenvalue is degenerate this is the maximum of
/// `|<s|v>|^2` over unit vectors `v` in the eigenspace, i.e. the squared norm
/// of the projection of `|s>` onto it.
pub fn uniform_overlap(a: &AdjacencyMatrix) -> f64 {
    let n = a.n();
    let eig = SymmetricEigen::new(a.matrix().clone());
    let top = eig.eigenvalues.max();
    let tol = 1e-9 * top.abs().max(1.0);
    let s = uniform_vector(n);
    let mut overlap = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if top - lambda <= tol {
            overlap += eig.eigenvectors.column(k).dot(&s).powi(2);
        }
    }
    overlap.min(1.0)
}
