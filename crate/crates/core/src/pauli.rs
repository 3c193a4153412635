//! Pauli strings and real-weighted Pauli sums.
//!
//! Qubit 0 is the leftmost character of a Pauli label and the most
//! significant bit of a computational basis index, so `to_dense` of `"ZI"`
//! equals `kron(Z, I)` and `|01⟩` is basis index 1.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type StateVector = DVector<Complex64>;

/// Largest Hilbert-space dimension materialized as a dense matrix unless overridden.
pub const DEFAULT_DENSE_CAP: usize = 1 << 12;

/// Coefficients whose magnitude falls below this after merging are dropped.
pub const MERGE_TOLERANCE: f64 = 1e-15;

const MAX_QUBITS: usize = 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' => Some(PauliAxis::I),
            'X' | 'x' => Some(PauliAxis::X),
            'Y' | 'y' => Some(PauliAxis::Y),
            'Z' | 'z' => Some(PauliAxis::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliAxis::I => 'I',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }
}

/// An n-qubit Pauli string stored as X and Z bit masks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn new(axes: &[PauliAxis]) -> Result<Self> {
        let n = axes.len();
        if n == 0 {
            return Err(Error::invalid("Pauli string must act on at least one qubit"));
        }
        if n > MAX_QUBITS {
            return Err(Error::invalid(format!("Pauli strings are limited to {MAX_QUBITS} qubits, got {n}")));
        }
        let mut x_mask = 0u64;
        let mut z_mask = 0u64;
        for (q, axis) in axes.iter().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            match axis {
                PauliAxis::I => {}
                PauliAxis::X => x_mask |= bit,
                PauliAxis::Y => {
                    x_mask |= bit;
                    z_mask |= bit;
                }
                PauliAxis::Z => z_mask |= bit,
            }
        }
        Ok(Self { n_qubits: n, x_mask, z_mask })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(&vec![PauliAxis::I; n_qubits])
    }

    /// Single-site or two-site string, used by the model builders.
    fn with_axes_at(n_qubits: usize, sites: &[(usize, PauliAxis)]) -> Result<Self> {
        let mut axes = vec![PauliAxis::I; n_qubits];
        for &(q, a) in sites {
            axes[q] = a;
        }
        Self::new(&axes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn axis(&self, qubit: usize) -> PauliAxis {
        let bit = 1u64 << (self.n_qubits - 1 - qubit);
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (false, false) => PauliAxis::I,
            (true, false) => PauliAxis::X,
            (true, true) => PauliAxis::Y,
            (false, true) => PauliAxis::Z,
        }
    }

    pub fn axes(&self) -> Vec<PauliAxis> {
        (0..self.n_qubits).map(|q| self.axis(q)).collect()
    }

    /// Phase picked up by basis state `b`: i^{#Y} · (−1)^{popcount(b & z)}.
    #[inline]
    fn phase(&self, basis: usize) -> Complex64 {
        let y_count = (self.x_mask & self.z_mask).count_ones();
        let sign_flips = (basis as u64 & self.z_mask).count_ones();
        // i^k for k mod 4, times the Z sign
        let base = match y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        if sign_flips.is_multiple_of(2) {
            base
        } else {
            -base
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found });
        }
        Ok(())
    }

    /// Adds `coeff · P·v` into `out` without allocating.
    fn accumulate(&self, coeff: Complex64, v: &StateVector, out: &mut StateVector) {
        let x = self.x_mask as usize;
        for (b, amp) in v.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            out[b ^ x] += coeff * self.phase(b) * amp;
        }
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        self.check_dim(v.len())?;
        let mut out = StateVector::zeros(v.len());
        self.accumulate(Complex64::new(1.0, 0.0), v, &mut out);
        Ok(out)
    }

    /// ⟨bra|P|ket⟩ without materializing P·ket.
    pub fn transition(&self, bra: &StateVector, ket: &StateVector) -> Result<Complex64> {
        self.check_dim(bra.len())?;
        self.check_dim(ket.len())?;
        let x = self.x_mask as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, amp) in ket.iter().enumerate() {
            acc += bra[b ^ x].conj() * self.phase(b) * amp;
        }
        Ok(acc)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .trim()
            .chars()
            .map(|c| {
                PauliAxis::from_char(c).ok_or_else(|| Error::Parse(format!("invalid Pauli label '{c}' in \"{s}\"")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&axes)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.axis(q).as_char())?;
        }
        Ok(())
    }
}

/// Hermitian operator Σ_i c_i P_i with real coefficients, kept in merged form.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    /// Builds a sum, merging duplicate strings and dropping coefficients below
    /// [`MERGE_TOLERANCE`]. Order of first appearance is preserved.
    pub fn new(n_qubits: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::invalid(format!("unsupported qubit count {n_qubits}")));
        }
        let mut merged: Vec<(f64, PauliString)> = Vec::new();
        let mut slot: HashMap<PauliString, usize> = HashMap::new();
        for (c, p) in terms {
            if p.n_qubits() != n_qubits {
                return Err(Error::invalid(format!(
                    "term {p} acts on {} qubits, sum declared {n_qubits}",
                    p.n_qubits()
                )));
            }
            if !c.is_finite() {
                return Err(Error::invalid(format!("non-finite coefficient on {p}")));
            }
            match slot.get(&p) {
                Some(&i) => merged[i].0 += c,
                None => {
                    slot.insert(p.clone(), merged.len());
                    merged.push((c, p));
                }
            }
        }
        merged.retain(|(c, _)| c.abs() >= MERGE_TOLERANCE);
        Ok(Self { n_qubits, terms: merged })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|(c, _)| *c).collect()
    }

    /// Σ_i |c_i|.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let mut out = StateVector::zeros(v.len());
        for (c, p) in &self.terms {
            p.accumulate(Complex64::new(*c, 0.0), v, &mut out);
        }
        Ok(out)
    }

    /// Dense 2^n × 2^n matrix, refused when the dimension exceeds `cap`.
    pub fn to_dense(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        let dim = self.dim();
        if dim > cap {
            return Err(Error::DenseCapExceeded { dim, cap });
        }
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (c, p) in &self.terms {
            let x = p.x_mask as usize;
            for col in 0..dim {
                m[(col ^ x, col)] += *c * p.phase(col);
            }
        }
        Ok(m)
    }

    /// Built-in open-chain spin models.
    pub fn model(kind: ModelKind, n_sites: usize, params: &[f64]) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::invalid(format!("spin chain models need at least 2 sites, got {n_sites}")));
        }
        let mut terms = Vec::new();
        match kind {
            ModelKind::TfimChain => {
                let (j, g) = match params {
                    [j, g] => (*j, *g),
                    _ => return Err(Error::invalid("tfim_chain expects parameters [J, g]".to_string())),
                };
                for i in 0..n_sites - 1 {
                    terms.push((-j, PauliString::with_axes_at(n_sites, &[(i, PauliAxis::Z), (i + 1, PauliAxis::Z)])?));
                }
                for i in 0..n_sites {
                    terms.push((-g, PauliString::with_axes_at(n_sites, &[(i, PauliAxis::X)])?));
                }
            }
            ModelKind::HeisenbergChain => {
                let j = match params {
                    [j] => *j,
                    _ => return Err(Error::invalid("heisenberg_chain expects parameters [J]".to_string())),
                };
                for i in 0..n_sites - 1 {
                    for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
                        terms.push((j, PauliString::with_axes_at(n_sites, &[(i, axis), (i + 1, axis)])?));
                    }
                }
            }
        }
        Self::new(n_sites, terms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TfimChain,
    HeisenbergChain,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tfim" | "tfim_chain" => Ok(ModelKind::TfimChain),
            "heisenberg" | "heisenberg_chain" => Ok(ModelKind::HeisenbergChain),
            other => Err(Error::invalid(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Computational basis state |index⟩.
pub fn basis_state(dim: usize, index: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[index] = Complex64::new(1.0, 0.0);
    v
}
