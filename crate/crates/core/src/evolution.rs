//! Exact unitary evolution under a fixed real-symmetric Hamiltonian.
//!
//! The main route is spectral: diagonalize once, then every sample time in
//! the interval costs a diagonal phase. [`TaylorStepper`] is the cheap route
//! for intervals that only need the end state.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

const STATE_NORM_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: DVector<C64>,
}

impl QuantumState {
    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::invalid("amplitudes", format!("norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    pub(crate) fn from_amplitudes_unchecked(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    /// The equal superposition `|s>`.
    pub fn uniform(n: usize) -> Self {
        let a = 1.0 / (n as f64).sqrt();
        Self { amplitudes: DVector::from_element(n, C64::new(a, 0.0)) }
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut amplitudes = DVector::zeros(n);
        amplitudes[i] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn probability(&self, i: usize) -> f64 {
        self.amplitudes[i].norm_sqr()
    }

    pub fn expectation(&self, h: &Hamiltonian) -> f64 {
        let re = self.amplitudes.map(|c| c.re);
        let im = self.amplitudes.map(|c| c.im);
        re.dot(&(h.matrix() * &re)) + im.dot(&(h.matrix() * &im))
    }
}

/// Real symmetric generator of one interval's dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<f64>,
}

impl Hamiltonian {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let n = matrix.nrows();
        let data = matrix.as_slice();
        let mut asym = 0.0_f64;
        for j in 0..n {
            for i in (j + 1)..n {
                asym = asym.max((data[i + j * n] - data[j + i * n]).abs());
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix", "entries must be finite"));
        }
        if !(asym <= SYMMETRY_TOL) {
            return Err(Error::invalid("matrix", format!("not symmetric (max deviation {asym:e})")));
        }
        Ok(Self { matrix })
    }

    /// For generators that are symmetric by construction.
    pub(crate) fn from_symmetric_unchecked(matrix: DMatrix<f64>) -> Self {
        debug_assert!(matrix.is_square());
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        let n = self.dim();
        let eig = SymmetricEigen::try_new(self.matrix.clone(), f64::EPSILON, 200 * n.max(10))
            .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver did not converge (n = {n})")))?;
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite eigenvalue".into()));
        }
        Ok(Spectrum { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut v: Vec<f64> = self.spectrum()?.values.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Upper bound on the spectral norm (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        self.matrix.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Eigendecomposition `H = V diag(values) V^T`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    fn phases(&self, t: f64) -> DVector<C64> {
        self.values.map(|l| C64::from_polar(1.0, -l * t))
    }

    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        let v = self.vectors.map(|x| C64::new(x, 0.0));
        let mut scaled = v.clone();
        for (k, ph) in self.phases(t).iter().enumerate() {
            for z in scaled.column_mut(k).iter_mut() {
                *z *= ph;
            }
        }
        scaled * v.transpose()
    }

    /// Coordinates of `psi` in the eigenbasis.
    pub fn coefficients(&self, psi: &QuantumState) -> DVector<C64> {
        let re = psi.amplitudes.map(|c| c.re);
        let im = psi.amplitudes.map(|c| c.im);
        let cr = self.vectors.tr_mul(&re);
        let ci = self.vectors.tr_mul(&im);
        cr.zip_map(&ci, C64::new)
    }

    /// `<i| e^{-iHt} |psi>` from precomputed coefficients, in O(n).
    pub fn amplitude(&self, coefficients: &DVector<C64>, i: usize, t: f64) -> C64 {
        let row = self.vectors.row(i);
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..coefficients.len() {
            acc += coefficients[k] * C64::from_polar(row[k], -self.values[k] * t);
        }
        acc
    }

    pub fn evolve_coefficients(&self, coefficients: &DVector<C64>, t: f64) -> QuantumState {
        let rotated = coefficients.component_mul(&self.phases(t));
        let re = &self.vectors * rotated.map(|c| c.re);
        let im = &self.vectors * rotated.map(|c| c.im);
        QuantumState::from_amplitudes_unchecked(re.zip_map(&im, C64::new))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `U = e^{-iHt}` from the eigendecomposition of `H`.
pub fn spectral_propagator(h: &Hamiltonian, t: f64) -> Result<DMatrix<C64>> {
    if !t.is_finite() {
        return Err(Error::invalid("t", "time must be finite"));
    }
    if t == 0.0 {
        return Ok(DMatrix::identity(h.dim(), h.dim()));
    }
    Ok(h.spectrum()?.propagator(t))
}

pub fn evolve_state(psi: &QuantumState, h: &Hamiltonian, t: f64) -> Result<QuantumState> {
    check_dim(h.dim(), psi.dim())?;
    let spec = h.spectrum()?;
    Ok(spec.evolve_coefficients(&spec.coefficients(psi), t))
}

/// Truncated Taylor series of `e^{-iHt}` applied directly to a state vector.
///
/// `H` is stored in compressed rows, shifted to the centre of its Gershgorin
/// interval, and the time step is split so that each substep has
/// `||H - c|| * dt <= 1`; the phase from the shift is restored exactly, so the
/// result is the same state as the spectral route up to rounding.
pub struct TaylorStepper {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    shift: f64,
    radius: f64,
}

impl TaylorStepper {
    pub fn new(h: &Hamiltonian) -> Self {
        let m = h.matrix();
        let n = m.nrows();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        row_start.push(0);
        for i in 0..n {
            let mut off = 0.0;
            // symmetric, so column i doubles as row i in column-major storage
            for (j, &v) in m.as_slice()[i * n..(i + 1) * n].iter().enumerate() {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                    if j != i {
                        off += v.abs();
                    }
                }
            }
            row_start.push(cols.len());
            lo = lo.min(m[(i, i)] - off);
            hi = hi.max(m[(i, i)] + off);
        }
        if n == 0 {
            (lo, hi) = (0.0, 0.0);
        }
        Self { row_start, cols, vals, shift: 0.5 * (lo + hi), radius: 0.5 * (hi - lo) }
    }

    /// Half-width of the Gershgorin interval, an upper bound on `||H - c||`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    pub fn step(&self, psi: &QuantumState, t: f64) -> QuantumState {
        let substeps = (self.radius * t.abs()).ceil().max(1.0) as usize;
        let dt = t / substeps as f64;
        let n = psi.dim();
        let mut state: Vec<C64> = psi.amplitudes.iter().copied().collect();
        let mut term = vec![C64::new(0.0, 0.0); n];
        let mut next = vec![C64::new(0.0, 0.0); n];
        for _ in 0..substeps {
            term.copy_from_slice(&state);
            for k in 1..=60 {
                // term <- (-i dt / k) (H - c) term
                let f = dt / k as f64;
                let mut largest = 0.0_f64;
                for i in 0..n {
                    let mut acc = -self.shift * term[i];
                    for idx in self.row_start[i]..self.row_start[i + 1] {
                        acc += self.vals[idx] * term[self.cols[idx]];
                    }
                    let v = C64::new(acc.im * f, -acc.re * f);
                    largest = largest.max(v.re.abs()).max(v.im.abs());
                    next[i] = v;
                }
                std::mem::swap(&mut term, &mut next);
                for (s, t) in state.iter_mut().zip(&term) {
                    *s += t;
                }
                if largest < 1e-18 {
                    break;
                }
            }
        }
        let phase = C64::from_polar(1.0, -self.shift * t);
        QuantumState::from_amplitudes_unchecked(DVector::from_iterator(n, state.into_iter().map(|c| c * phase)))
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const POSITIVITY_TOL: f64 = 1e-9;

    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        Self { matrix }
    }

    pub fn pure(psi: &QuantumState) -> Self {
        let a = psi.amplitudes();
        Self { matrix: a * a.adjoint() }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) * C64::new(1.0 / n as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: self.matrix.nrows(), found: self.matrix.ncols() });
        }
        let herm = self.hermiticity_error();
        if !(herm <= Self::HERMITIAN_TOL) {
            return Err(Error::invalid("rho", format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if !((tr - 1.0).abs() <= Self::TRACE_TOL) {
            return Err(Error::invalid("rho", format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if !(min >= -Self::POSITIVITY_TOL) {
            return Err(Error::invalid("rho", format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `U rho U^dagger`.
    pub fn conjugate(&self, u: &DMatrix<C64>) -> Self {
        Self { matrix: u * &self.matrix * u.adjoint() }
    }

    /// Convex combination `sum_i w_i rho_i`.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let n = parts.first().map(|(_, r)| r.dim()).unwrap_or(0);
        let mut m = DMatrix::zeros(n, n);
        for (w, r) in parts {
            check_dim(n, r.dim())?;
            m += r.matrix() * C64::new(*w, 0.0);
        }
        Ok(Self { matrix: m })
    }
}

pub fn evolve_density(rho: &DensityMatrix, h: &Hamiltonian, t: f64) -> Result<DensityMatrix> {
    check_dim(h.dim(), rho.dim())?;
    Ok(rho.conjugate(&spectral_propagator(h, t)?))
}

/// Which norm to use when comparing density matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceNorm {
    #[default]
    Trace,
    Operator,
}

fn difference_eigenvalues(a: &DensityMatrix, b: &DensityMatrix) -> Result<DVector<f64>> {
    check_dim(a.dim(), b.dim())?;
    let d = a.matrix() - b.matrix();
    let herm = (&d + d.adjoint()) * C64::new(0.5, 0.0);
    Ok(herm.symmetric_eigenvalues())
}

/// `(1/2) sum |eig(rho1 - rho2)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok(0.5 * difference_eigenvalues(a, b)?.iter().map(|v| v.abs()).sum::<f64>())
}

/// Largest absolute eigenvalue of `rho1 - rho2`.
pub fn operator_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok(difference_eigenvalues(a, b)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}

pub fn distance(a: &DensityMatrix, b: &DensityMatrix, norm: DistanceNorm) -> Result<f64> {
    match norm {
        DistanceNorm::Trace => trace_distance(a, b),
        DistanceNorm::Operator => operator_distance(a, b),
    }
}
