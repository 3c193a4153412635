//! Regularized solution of TΦ = ΛSΦ.
//!
//! S = WΣZ is truncated to the index set 𝓘 = {i : Σ_i > σ}; both matrices are
//! projected as (W⁻¹·M·Z⁻¹)_𝓘𝓘, leaving S̃ = diag(Σ_𝓘), and the eigenvalues of
//! S̃⁻¹T̃ are returned unordered and complex.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig;
use crate::error::{Error, Result};

const SVD_MAX_ITER: usize = 10_000;
const HERMITIAN_TOL: f64 = 1e-12;
const INFINITE_KAPPA_FLOOR: f64 = 1e-300;
const DIAGONAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "sigma", rename_all = "snake_case")]
pub enum RegularizationMethod {
    None,
    Fixed(f64),
    Elbow,
    LitA,
    LitB,
}

impl fmt::Display for RegularizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegularizationMethod::None => f.write_str("none"),
            RegularizationMethod::Fixed(s) => write!(f, "fixed:{s:e}"),
            RegularizationMethod::Elbow => f.write_str("elbow"),
            RegularizationMethod::LitA => f.write_str("lit_a"),
            RegularizationMethod::LitB => f.write_str("lit_b"),
        }
    }
}

impl FromStr for RegularizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "none" | "off" => return Ok(RegularizationMethod::None),
            "elbow" => return Ok(RegularizationMethod::Elbow),
            "lit_a" | "lit-a" | "a" => return Ok(RegularizationMethod::LitA),
            "lit_b" | "lit-b" | "b" => return Ok(RegularizationMethod::LitB),
            _ => {}
        }
        let value = lower.strip_prefix("fixed:").unwrap_or(&lower);
        let sigma: f64 = value.parse().map_err(|_| Error::Config(format!("unknown regularization '{s}'")))?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("fixed threshold must be non-negative, got {sigma}")));
        }
        Ok(RegularizationMethod::Fixed(sigma))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationSpec {
    pub method: RegularizationMethod,
    /// Per-element statistical error, 1/√M (0 when noiseless).
    pub noise_level: f64,
    /// Algorithm-dependent normalization: ‖H‖ for QKS-U, √(Σ|c_i|) for QKS-H.
    pub n_f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub value: f64,
    /// Knee position for the elbow method.
    pub elbow_index: Option<usize>,
    /// Set when the elbow was undefined and the threshold fell back to 0.
    pub fallback: bool,
}

#[derive(Clone, Debug)]
pub struct Svd {
    pub w: DMatrix<Complex64>,
    /// Descending, non-negative.
    pub sigma: Vec<f64>,
    pub z: DMatrix<Complex64>,
}

/// S = W·diag(Σ)·Z with singular values sorted descending.
pub fn svd(s: &DMatrix<Complex64>) -> Result<Svd> {
    if !s.is_square() {
        return Err(Error::invalid("overlap matrix must be square"));
    }
    let n = s.nrows();
    let scale = s.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let skew = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max((s[(i, j)] - s[(j, i)].conj()).norm()));
    if skew <= HERMITIAN_TOL * scale {
        // S = V Λ V† gives W = V, σ = |λ|, Z = sign(Λ) V†; the complex SVD
        // iteration loses relative accuracy in the small σ that matter here.
        let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, SVD_MAX_ITER)
            .ok_or(Error::NoConvergence { routine: "Hermitian eigensolver", iterations: SVD_MAX_ITER })?;
        let v = eig.eigenvectors;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
        return Ok(Svd {
            w: DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]),
            sigma: order.iter().map(|&i| eig.eigenvalues[i].abs()).collect(),
            z: DMatrix::from_fn(n, n, |r, c| {
                let sign = if eig.eigenvalues[order[r]] < 0.0 { -1.0 } else { 1.0 };
                v[(c, order[r])].conj() * sign
            }),
        });
    }
    let dec = SVD::try_new(s.clone(), true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::NoConvergence { routine: "SVD", iterations: SVD_MAX_ITER })?;
    let (u, vt) = (dec.u.expect("requested U"), dec.v_t.expect("requested V^T"));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    Ok(Svd {
        w: DMatrix::from_fn(n, n, |r, c| u[(r, order[c])]),
        sigma: order.iter().map(|&i| dec.singular_values[i]).collect(),
        z: DMatrix::from_fn(n, n, |r, c| vt[(order[r], c)]),
    })
}

/// Index of maximal perpendicular distance from (i, log10 σ_i) to the chord
/// joining the first and last points.
pub fn elbow_index(singular_values: &[f64]) -> Option<usize> {
    let n = singular_values.len();
    if n < 3 {
        return None;
    }
    let y: Vec<f64> = singular_values.iter().map(|s| s.max(f64::MIN_POSITIVE).log10()).collect();
    let (x0, y0) = (0.0, y[0]);
    let (x1, y1) = ((n - 1) as f64, y[n - 1]);
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len = dx.hypot(dy);
    (0..n)
        .map(|i| ((dy * (i as f64 - x0) - dx * (y[i] - y0)).abs() / len, i))
        .fold(None, |best: Option<(f64, usize)>, (d, i)| match best {
            Some((bd, _)) if bd >= d => best,
            _ => Some((d, i)),
        })
        .map(|(_, i)| i)
}

/// σ = 0.1 × noise × size × N_F
pub fn lit_a_threshold(noise_level: f64, krylov_size: usize, n_f: f64) -> f64 {
    0.1 * noise_level * krylov_size as f64 * n_f
}

/// σ = 2·√(size · ln(2·size)) × noise
pub fn lit_b_threshold(noise_level: f64, krylov_size: usize) -> f64 {
    let k = krylov_size as f64;
    2.0 * (k * (2.0 * k).ln()).sqrt() * noise_level
}

pub fn choose_threshold(spec: &RegularizationSpec, singular_values: &[f64], krylov_size: usize) -> Result<Threshold> {
    if krylov_size == 0 {
        return Err(Error::invalid("Krylov size must be at least 1"));
    }
    if singular_values.is_empty() {
        return Err(Error::invalid("no singular values supplied"));
    }
    let plain = |value| Threshold { value, elbow_index: None, fallback: false };
    Ok(match spec.method {
        RegularizationMethod::None => plain(0.0),
        RegularizationMethod::Fixed(s) => plain(s),
        RegularizationMethod::LitA => plain(lit_a_threshold(spec.noise_level, krylov_size, spec.n_f)),
        RegularizationMethod::LitB => plain(lit_b_threshold(spec.noise_level, krylov_size)),
        RegularizationMethod::Elbow => match elbow_index(singular_values) {
            Some(i) => Threshold { value: singular_values[i], elbow_index: Some(i), fallback: false },
            None => Threshold { value: 0.0, elbow_index: None, fallback: true },
        },
    })
}

/// σ_max/σ_min, or +∞ when σ_min < 1e−300.
pub fn condition_number_from(singular_values: &[f64]) -> f64 {
    let max = singular_values.iter().copied().fold(0.0, f64::max);
    let min = singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < INFINITE_KAPPA_FLOOR {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn condition_number(s: &DMatrix<Complex64>) -> Result<f64> {
    Ok(condition_number_from(&svd(s)?.sigma))
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub s_tilde: DMatrix<Complex64>,
    pub t_tilde: DMatrix<Complex64>,
    pub kept: Vec<usize>,
}

/// Projects (S, T) onto the singular directions of S above `threshold`.
pub fn regularize_with(
    dec: &Svd,
    s: &DMatrix<Complex64>,
    t: &DMatrix<Complex64>,
    threshold: f64,
) -> Result<Projection> {
    if s.shape() != t.shape() {
        return Err(Error::DimensionMismatch { expected: s.nrows(), found: t.nrows() });
    }
    let kept: Vec<usize> = (0..dec.sigma.len()).filter(|&i| dec.sigma[i] > threshold).collect();
    if kept.is_empty() {
        return Err(Error::AllEliminated);
    }
    // W and Z are unitary, so W⁻¹ = W† and Z⁻¹ = Z†. W†SZ is diag(σ) exactly;
    // recomputing it would bury the small kept σ under rounding of order ε‖S‖.
    let w_k = dec.w.select_columns(&kept);
    let z_k = dec.z.select_rows(&kept).adjoint();
    let s_tilde = DMatrix::from_diagonal(&DVector::from_iterator(
        kept.len(),
        kept.iter().map(|&i| Complex64::new(dec.sigma[i], 0.0)),
    ));
    let t_tilde = w_k.adjoint() * t * &z_k;
    Ok(Projection { s_tilde, t_tilde, kept })
}

pub fn regularize(s: &DMatrix<Complex64>, t: &DMatrix<Complex64>, threshold: f64) -> Result<Projection> {
    regularize_with(&svd(s)?, s, t, threshold)
}

/// Eigenvalues of S̃⁻¹T̃ for a diagonal positive S̃.
pub fn solve(
    s_tilde: &DMatrix<Complex64>,
    t_tilde: &DMatrix<Complex64>,
    want_vectors: bool,
) -> Result<eig::ComplexEigen> {
    let n = s_tilde.nrows();
    if s_tilde.shape() != t_tilde.shape() || !s_tilde.is_square() {
        return Err(Error::invalid("projected matrices must be square and of equal size"));
    }
    let diag: Vec<f64> = (0..n).map(|i| s_tilde[(i, i)].re).collect();
    let scale = diag.iter().copied().fold(0.0, f64::max);
    for i in 0..n {
        if !(diag[i] > 0.0) {
            return Err(Error::invalid("projected overlap must have a positive diagonal"));
        }
        for j in 0..n {
            let z = s_tilde[(i, j)];
            let off = if i == j { z.im.abs() } else { z.norm() };
            if off > DIAGONAL_TOL * scale {
                return Err(Error::invalid("projected overlap is not diagonal"));
            }
        }
    }
    // D^{-1/2} T̃ D^{-1/2} is similar to D⁻¹T̃ but stays balanced when the kept
    // σ span many decades, and stays Hermitian for Hermitian T̃.
    let root: Vec<f64> = diag.iter().map(|d| d.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| t_tilde[(i, j)] / (root[i] * root[j]));
    let mut eigen = eig::eigen(&a, want_vectors)?;
    if let Some(v) = eigen.vectors.as_mut() {
        for mut col in v.column_iter_mut() {
            for (z, r) in col.iter_mut().zip(&root) {
                *z /= *r;
            }
            let norm = col.norm();
            col /= Complex64::new(norm, 0.0);
        }
    }
    Ok(eigen)
}

#[derive(Clone, Debug)]
pub struct GevpSolution {
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvectors in Krylov-basis coordinates (columns), when requested.
    pub eigenvectors: Option<DMatrix<Complex64>>,
    pub kept_indices: Vec<usize>,
    pub singular_values: Vec<f64>,
    /// κ of the unregularized S.
    pub condition_number: f64,
    /// κ of S̃ over the kept singular values.
    pub condition_number_kept: f64,
    pub threshold: Threshold,
}

/// Outcome of the full pipeline; elimination is data, not failure.
#[derive(Clone, Debug)]
pub enum GevpOutcome {
    Solved(GevpSolution),
    Eliminated { singular_values: Vec<f64>, condition_number: f64, threshold: Threshold },
}

impl GevpOutcome {
    pub fn condition_number(&self) -> f64 {
        match self {
            GevpOutcome::Solved(s) => s.condition_number,
            GevpOutcome::Eliminated { condition_number, .. } => *condition_number,
        }
    }

    pub fn threshold(&self) -> Threshold {
        match self {
            GevpOutcome::Solved(s) => s.threshold,
            GevpOutcome::Eliminated { threshold, .. } => *threshold,
        }
    }

    pub fn singular_values(&self) -> &[f64] {
        match self {
            GevpOutcome::Solved(s) => &s.singular_values,
            GevpOutcome::Eliminated { singular_values, .. } => singular_values,
        }
    }
}

/// SVD, threshold selection, projection and eigensolve in one pass.
pub fn solve_gevp(
    s: &DMatrix<Complex64>,
    t: &DMatrix<Complex64>,
    spec: &RegularizationSpec,
    want_vectors: bool,
) -> Result<GevpOutcome> {
    let dec = svd(s)?;
    let kappa = condition_number_from(&dec.sigma);
    let threshold = choose_threshold(spec, &dec.sigma, s.nrows())?;
    let proj = match regularize_with(&dec, s, t, threshold.value) {
        Ok(p) => p,
        Err(Error::AllEliminated) => {
            return Ok(GevpOutcome::Eliminated { singular_values: dec.sigma, condition_number: kappa, threshold })
        }
        Err(e) => return Err(e),
    };
    let kept_sigma: Vec<f64> = proj.kept.iter().map(|&i| dec.sigma[i]).collect();
    let eigen = solve(&proj.s_tilde, &proj.t_tilde, want_vectors)?;
    let eigenvectors = eigen.vectors.map(|phi| dec.z.select_rows(&proj.kept).adjoint() * phi);
    Ok(GevpOutcome::Solved(GevpSolution {
        eigenvalues: eigen.values,
        eigenvectors,
        kept_indices: proj.kept,
        condition_number_kept: condition_number_from(&kept_sigma),
        singular_values: dec.sigma,
        condition_number: kappa,
        threshold,
    }))
}
