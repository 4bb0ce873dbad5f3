//! Independent matrix-exponential oracle shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use temporal_search::evolution::{
    evolve_density, evolve_state, spectral_propagator, DensityMatrix, Hamiltonian, QuantumState, TaylorStepper, C64,
};

pub const DIM: usize = 8;
pub const UPPER: usize = DIM * (DIM + 1) / 2;

/// `e^{-iHt}` by scaling, a 30-term Taylor series and repeated squaring.
pub fn expm_oracle(h: &DMatrix<f64>, t: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let a = h.map(|x| C64::new(0.0, -x * t));
    let norm: f64 = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / C64::new(2f64.powi(squarings as i32), 0.0);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn symmetric(entries: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(DIM, DIM);
    let mut k = 0;
    for i in 0..DIM {
        for j in i..DIM {
            m[(i, j)] = entries[k];
            m[(j, i)] = entries[k];
            k += 1;
        }
    }
    m
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_abs_vec(v: &DVector<C64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest deviations seen on one random instance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Deviations {
    pub propagator: f64,
    pub unitarity: f64,
    pub norm: f64,
    pub trace: f64,
    pub state: f64,
}

impl Deviations {
    pub fn max(self, o: Self) -> Self {
        Self {
            propagator: self.propagator.max(o.propagator),
            unitarity: self.unitarity.max(o.unitarity),
            norm: self.norm.max(o.norm),
            trace: self.trace.max(o.trace),
            state: self.state.max(o.state),
        }
    }

    pub fn within(&self) -> bool {
        self.propagator < 1e-8 && self.state < 1e-8 && self.unitarity < 1e-9 && self.norm < 1e-9 && self.trace < 1e-9
    }
}

/// Compares every propagation path against the oracle for one instance.
/// `amps` holds interleaved real and imaginary parts of the initial state.
pub fn deviations(entries: &[f64], amps: &[f64], t: f64) -> Deviations {
    let m = symmetric(entries);
    let h = Hamiltonian::new(m.clone()).unwrap();
    let oracle = expm_oracle(&m, t);

    let u = spectral_propagator(&h, t).unwrap();
    let propagator = max_abs(&(&u - &oracle));
    let unitarity = max_abs(&(u.adjoint() * &u - DMatrix::<C64>::identity(DIM, DIM)));

    let v = DVector::from_iterator(DIM, amps.chunks(2).map(|c| C64::new(c[0], c[1])));
    let norm = v.norm();
    let psi = if norm > 1e-6 {
        QuantumState::from_amplitudes(v / C64::new(norm, 0.0)).unwrap()
    } else {
        QuantumState::uniform(DIM)
    };
    let expected = &oracle * psi.amplitudes();
    let spectral = evolve_state(&psi, &h, t).unwrap();
    let taylor = TaylorStepper::new(&h).step(&psi, t);
    let state = max_abs_vec(&(spectral.amplitudes() - &expected)).max(max_abs_vec(&(taylor.amplitudes() - &expected)));
    let norm = (spectral.norm() - psi.norm()).abs().max((taylor.norm() - psi.norm()).abs());

    let rho = DensityMatrix::pure(&psi);
    let evolved = evolve_density(&rho, &h, t).unwrap();
    let trace = (evolved.trace() - rho.trace()).abs();

    Deviations { propagator, unitarity, norm, trace, state }
}
