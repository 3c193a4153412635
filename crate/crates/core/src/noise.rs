//! Finite-sampling model for Hadamard-test matrix elements.
//!
//! Real and imaginary parts are estimated independently from `M` binary
//! outcomes each. Hamiltonian elements spread `M` shots per part over the
//! Pauli terms in proportion to |c_i|.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, StateVector};

/// Above this many shots a moment-matched Gaussian replaces the binomial draw.
pub const EXACT_BINOMIAL_LIMIT: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub shots_per_part: u64,
    pub seed: u64,
    pub enabled: bool,
    /// Sample self-conjugate diagonal elements too (e.g. S_ii = 1 for unitary generators).
    pub sample_diagonal: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { shots_per_part: 1_000_000, seed: 0, enabled: true, sample_diagonal: true }
    }
}

impl NoiseSpec {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }

    pub fn with_shots(shots_per_part: u64, seed: u64) -> Self {
        Self { shots_per_part, seed, ..Self::default() }
    }

    /// 1/√M, the per-element statistical error scale used by the thresholds.
    pub fn noise_level(&self) -> f64 {
        if self.enabled {
            1.0 / (self.shots_per_part as f64).sqrt()
        } else {
            0.0
        }
    }

    pub fn gaussian_approximation(&self) -> bool {
        self.enabled && self.shots_per_part > EXACT_BINOMIAL_LIMIT
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && self.shots_per_part == 0 {
            return Err(Error::invalid("shots per part must be positive"));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent, reproducible stream for one sampled quantity, derived from the
/// base seed and an identifying tuple of words.
pub fn stream(seed: u64, words: &[u64]) -> ChaCha8Rng {
    let mut h = mix(seed);
    for &w in words {
        h = mix(h ^ w);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// One Hadamard-test estimate of `x` from `shots` outcomes: 2k/M − 1 with
/// k ~ Binomial(M, (1+x)/2).
pub fn sample_part<R: Rng + ?Sized>(x: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(Error::invalid("sample_part needs at least one shot"));
    }
    if !x.is_finite() || x.abs() > 1.0 + 1e-9 {
        return Err(Error::invalid(format!("expectation value {x} is outside [-1, 1]")));
    }
    let x = x.clamp(-1.0, 1.0);
    let p = 0.5 * (1.0 + x);
    let m = shots as f64;
    if p == 0.0 || p == 1.0 {
        return Ok(x);
    }
    let k = if shots > EXACT_BINOMIAL_LIMIT {
        let sd = (m * p * (1.0 - p)).sqrt();
        let draw = Normal::new(m * p, sd).map_err(|e| Error::invalid(e.to_string()))?.sample(rng);
        draw.round().clamp(0.0, m)
    } else {
        Binomial::new(shots, p).map_err(|e| Error::invalid(e.to_string()))?.sample(rng) as f64
    };
    Ok(2.0 * k / m - 1.0)
}

/// Noisy estimate of a bounded complex expectation value. `real_only` is for
/// self-conjugate elements whose imaginary part vanishes identically.
pub fn noisy_overlap<R: Rng + ?Sized>(
    value: Complex64,
    spec: &NoiseSpec,
    real_only: bool,
    rng: &mut R,
) -> Result<Complex64> {
    if !spec.enabled {
        return Ok(value);
    }
    let re = sample_part(value.re, spec.shots_per_part, rng)?;
    let im = if real_only { 0.0 } else { sample_part(value.im, spec.shots_per_part, rng)? };
    Ok(Complex64::new(re, im))
}

/// Deterministic weighted allocation: round(|c_i| / Σ|c_j| · M), halves away from zero.
pub fn allocate_shots(coeffs: &[f64], shots: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::invalid("shot budget must be positive"));
    }
    let total: f64 = coeffs.iter().map(|c| c.abs()).sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::invalid("shot allocation needs at least one nonzero finite coefficient"));
    }
    Ok(coeffs.iter().map(|c| (c.abs() / total * shots as f64).round() as u64).collect())
}

/// ⟨bra|H|ket⟩ estimated term by term with weighted shot allocation.
/// Terms allotted zero shots contribute nothing.
pub fn noisy_hamiltonian_element<R: Rng + ?Sized>(
    bra: &StateVector,
    ket: &StateVector,
    h: &PauliSum,
    spec: &NoiseSpec,
    real_only: bool,
    rng: &mut R,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    if !spec.enabled {
        for (c, p) in h.terms() {
            acc += *c * p.transition(bra, ket)?;
        }
        return Ok(acc);
    }
    if h.is_empty() {
        return Ok(acc);
    }
    let alloc = allocate_shots(&h.coefficients(), spec.shots_per_part)?;
    for ((c, p), &m) in h.terms().iter().zip(&alloc) {
        if m == 0 {
            continue;
        }
        let exact = p.transition(bra, ket)?;
        let re = sample_part(exact.re, m, rng)?;
        let im = if real_only { 0.0 } else { sample_part(exact.im, m, rng)? };
        acc += *c * Complex64::new(re, im);
    }
    Ok(acc)
}
