//! Dense eigensolver for general complex matrices: Householder reduction to
//! Hessenberg form, then single-shift QR sweeps (Wilkinson shifts, with
//! exceptional shifts on stagnation) down to complex Schur form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ITERATIONS_PER_EIGENVALUE: usize = 60;

#[derive(Clone, Debug)]
pub struct ComplexEigen {
    pub values: Vec<Complex64>,
    /// Unit-norm right eigenvectors as columns, when requested.
    pub vectors: Option<DMatrix<Complex64>>,
}

/// Givens rotation G = [[c, s], [−s̄, c]] with G·[x; y] = [r; 0].
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn hessenberg(a: &mut DMatrix<Complex64>, q: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0].norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // A ← (I − 2vv†) A on rows k+1..n
        for col in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + 1 + i, col)]).sum();
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, col)] -= 2.0 * vi * dot;
            }
        }
        // A ← A (I − 2vv†) and Q ← Q (I − 2vv†) on columns k+1..n
        for m in [&mut *a, &mut *q] {
            for row in 0..n {
                let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| m[(row, k + 1 + i)] * vi).sum();
                for (i, vi) in v.iter().enumerate() {
                    m[(row, k + 1 + i)] -= 2.0 * dot * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Eigenvalue of the trailing 2×2 block closer to its last diagonal entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Reduces `a` in place to upper-triangular Schur form, accumulating `q`.
fn schur(a: &mut DMatrix<Complex64>, q: &mut DMatrix<Complex64>) -> Result<()> {
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 || n < 2 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let budget = ITERATIONS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut tol = eps * (a[(l - 1, l - 1)].norm() + a[(l, l)].norm());
            if tol == 0.0 {
                tol = eps * scale;
            }
            if a[(l, l - 1)].norm() <= tol {
                a[(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > budget {
            return Err(Error::NoConvergence { routine: "complex QR eigensolver", iterations: total });
        }
        let mu = if since_deflation % 11 == 10 {
            a[(hi, hi)] + Complex64::new(0.75 * a[(hi, hi - 1)].norm(), 0.25 * a[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(a[(hi - 1, hi - 1)], a[(hi - 1, hi)], a[(hi, hi - 1)], a[(hi, hi)])
        };
        if !mu.re.is_finite() || !mu.im.is_finite() {
            return Err(Error::NoConvergence {
                routine: "complex QR eigensolver (non-finite shift)",
                iterations: total,
            });
        }

        for i in l..=hi {
            a[(i, i)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(a[(k, k)], a[(k + 1, k)]);
            for col in k..n {
                let x = a[(k, col)];
                let y = a[(k + 1, col)];
                a[(k, col)] = c * x + s * y;
                a[(k + 1, col)] = -s.conj() * x + c * y;
            }
            a[(k + 1, k)] = Complex64::new(0.0, 0.0);
            rotations.push((k, c, s));
        }
        for &(k, c, s) in &rotations {
            let last = (k + 2).min(hi);
            for row in 0..=last {
                let x = a[(row, k)];
                let y = a[(row, k + 1)];
                a[(row, k)] = x * c + y * s.conj();
                a[(row, k + 1)] = -x * s + y * c;
            }
            for row in 0..n {
                let x = q[(row, k)];
                let y = q[(row, k + 1)];
                q[(row, k)] = x * c + y * s.conj();
                q[(row, k + 1)] = -x * s + y * c;
            }
        }
        for i in l..=hi {
            a[(i, i)] += mu;
        }
    }
    Ok(())
}

/// Eigenvalues (and optionally eigenvectors) of a square complex matrix.
pub fn eigen(m: &DMatrix<Complex64>, want_vectors: bool) -> Result<ComplexEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::invalid("eigensolver needs a square matrix"));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let mut a = m.clone();
    let mut q = DMatrix::<Complex64>::identity(n, n);
    hessenberg(&mut a, &mut q);
    schur(&mut a, &mut q)?;
    let values: Vec<Complex64> = (0..n).map(|i| a[(i, i)]).collect();
    if !want_vectors {
        return Ok(ComplexEigen { values, vectors: None });
    }

    let small = f64::EPSILON * a.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lam = values[k];
        let mut y = DVector::<Complex64>::zeros(n);
        y[k] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let rhs: Complex64 = (j + 1..=k).map(|m| a[(j, m)] * y[m]).sum();
            let mut denom = a[(j, j)] - lam;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[j] = -rhs / denom;
        }
        let x = &q * y;
        let norm = x.norm();
        vectors.set_column(k, &(x / Complex64::new(norm, 0.0)));
    }
    Ok(ComplexEigen { values, vectors: Some(vectors) })
}
