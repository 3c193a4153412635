//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Small deterministic generator so oracles do not share the crate's RNG plumbing.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn complex_matrix(&mut self, n: usize) -> CMat {
        CMat::from_fn(n, n, |_, _| c(self.normal(), self.normal()))
    }

    /// Haar-ish unitary from the QR decomposition of a Gaussian matrix.
    pub fn unitary(&mut self, n: usize) -> CMat {
        self.complex_matrix(n).qr().q()
    }
}

/// Cyclic Jacobi on the real symmetric embedding [[A, −B], [B, A]] of a
/// Hermitian A + iB. Every eigenvalue of the embedding appears twice.
pub fn jacobi_hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            a[(i, j)] = z.re;
            a[(i + n, j + n)] = z.re;
            a[(i, j + n)] = -z.im;
            a[(i + n, j)] = z.im;
        }
    }
    let dim = 2 * n;
    for _sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() < 1e-14 * a.norm().max(1.0) {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..dim {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..dim {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..dim).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

/// e^{−iHt}·v by a truncated Taylor series over sub-steps with ‖H‖·dt ≤ 1/2.
pub fn taylor_evolve(h: &CMat, v: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
    let norm = h.norm(); // Frobenius bounds the spectral norm
    let steps = ((norm * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut out = v.clone();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut acc = out.clone();
        for k in 1..60 {
            term = (h * &term) * c(0.0, -dt / k as f64);
            acc += &term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        out = acc;
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = CMat::identity(n, n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm())).unwrap();
        a.swap_rows(col, piv);
        inv.swap_rows(col, piv);
        let d = a[(col, col)];
        for k in 0..n {
            a[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[(r, col)];
                if f != c(0.0, 0.0) {
                    for k in 0..n {
                        let (ak, ik) = (a[(col, k)], inv[(col, k)]);
                        a[(r, k)] -= f * ak;
                        inv[(r, k)] -= f * ik;
                    }
                }
            }
        }
    }
    inv
}

/// Eigenvalues of S⁻¹T through an explicit inverse and a library Schur form.
pub fn gevp_oracle(s: &CMat, t: &CMat) -> Vec<Complex64> {
    let m = inverse(s) * t;
    m.schur().eigenvalues().expect("complex Schur yields eigenvalues").iter().copied().collect()
}

/// Smallest achievable max |a_i − b_π(i)| over bijections π (bottleneck matching).
pub fn matching_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "eigenvalue counts differ");
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let d: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let mut cands: Vec<f64> = d.iter().flatten().copied().collect();
    cands.sort_by(f64::total_cmp);
    let feasible = |limit: f64| -> bool {
        let mut owner: Vec<Option<usize>> = vec![None; n];
        fn augment(i: usize, limit: f64, d: &[Vec<f64>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
            for j in 0..d.len() {
                if d[i][j] <= limit && !seen[j] {
                    seen[j] = true;
                    if owner[j].is_none() || augment(owner[j].unwrap(), limit, d, seen, owner) {
                        owner[j] = Some(i);
                        return true;
                    }
                }
            }
            false
        }
        (0..n).all(|i| augment(i, limit, &d, &mut vec![false; n], &mut owner))
    };
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

/// Random Hermitian positive-definite matrix with singular values log-uniform in [1/cond, 1].
pub fn random_psd(rng: &mut Lcg, n: usize, cond: f64) -> CMat {
    let u = rng.unitary(n);
    let sig: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => 1.0 / cond,
            _ => cond.powf(-rng.uniform()),
        })
        .collect();
    let d = CMat::from_diagonal(&DVector::from_iterator(n, sig.iter().map(|&s| c(s, 0.0))));
    let s = &u * d * u.adjoint();
    (&s + s.adjoint()) * c(0.5, 0.0)
}

/// Largest entry modulus of any complex matrix or view.
pub fn max_abs<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<Complex64, R, C>>(
    m: &nalgebra::Matrix<Complex64, R, C, S>,
) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}
