//! Dense exact baseline: Hermitian eigendecomposition, exact time evolution,
//! ground state and spectral norm.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, StateVector};

/// Energy gap below which the ground space is reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

const EIGEN_MAX_SWEEPS: usize = 10_000;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
    n_qubits: usize,
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    pub degenerate: bool,
}

impl SpectralDecomposition {
    /// Full eigendecomposition of `h.to_dense(cap)`, eigenvalues ascending.
    pub fn diagonalize(h: &PauliSum, cap: usize) -> Result<Self> {
        let m = h.to_dense(cap)?;
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS)
            .ok_or(Error::NoConvergence { routine: "Hermitian eigensolver", iterations: EIGEN_MAX_SWEEPS })?;

        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);

        let d = Self { eigenvalues, eigenvectors, n_qubits: h.n_qubits() };
        let norm = d.spectral_norm().max(f64::MIN_POSITIVE);
        for k in 0..d.dim() {
            let v = d.eigenvectors.column(k);
            let r = (&m * v - v * Complex64::new(d.eigenvalues[k], 0.0)).norm();
            if r > RESIDUAL_TOL * norm.max(scale) {
                return Err(Error::NoConvergence {
                    routine: "Hermitian eigensolver (residual check failed)",
                    iterations: EIGEN_MAX_SWEEPS,
                });
            }
        }
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// ‖H‖ = max_k |λ_k|.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    /// e^{−iHt}·v through the eigenbasis.
    pub fn evolve(&self, v: &StateVector, time: f64) -> Result<StateVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let coeffs = self.eigenvectors.ad_mul(v);
        let phased = DVector::from_iterator(
            self.dim(),
            coeffs.iter().zip(&self.eigenvalues).map(|(a, &l)| a * Complex64::from_polar(1.0, -l * time)),
        );
        Ok(&self.eigenvectors * phased)
    }

    pub fn ground_state(&self) -> GroundState {
        let degenerate = self.dim() > 1 && self.eigenvalues[1] - self.eigenvalues[0] < DEGENERACY_TOL;
        GroundState { energy: self.eigenvalues[0], state: self.eigenvectors.column(0).into_owned(), degenerate }
    }

    /// V·diag(λ)·V†, used to check the decomposition.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.eigenvectors[(r, c)] * self.eigenvalues[c]);
        scaled * self.eigenvectors.adjoint()
    }
}
