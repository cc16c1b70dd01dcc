#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
    }
    out
}

/// Brute-force `(1/T) aᵀ b` by explicit index loops.
pub fn brute_cross(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let t = a.nrows();
    let mut out = DMatrix::zeros(a.ncols(), b.ncols());
    for i in 0..a.ncols() {
        for j in 0..b.ncols() {
            let mut s = 0.0;
            for r in 0..t {
                s += a[(r, i)] * b[(r, j)];
            }
            out[(i, j)] = s / t as f64;
        }
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Symmetric inverse square root via [`jacobi_eigen`], independent of the
/// Cholesky route used by the library.
pub fn inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = jacobi_eigen(m);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|l| 1.0 / l.sqrt())));
    &vecs * d * vecs.transpose()
}

pub fn descending(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Roots of the characteristic polynomial of a small symmetric PSD matrix.
/// Coefficients come from Faddeev–LeVerrier; real roots are bracketed on a
/// fine grid over `[−1, trace + 1]` and refined by bisection.
pub fn charpoly_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut coeffs = vec![1.0];
    let mut mk = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        mk = m * (&mk + &id * coeffs[k - 1]);
        let c = -mk.trace() / k as f64;
        coeffs.push(c);
    }
    let p = |x: f64| coeffs.iter().fold(0.0, |acc, c| acc * x + c);
    let hi = m.trace().abs() + 1.0;
    let steps = 200_000;
    let mut roots = Vec::new();
    let lo0 = -1e-9 * hi;
    let grid = |i: usize| lo0 + (hi - lo0) * i as f64 / steps as f64;
    for i in 0..steps {
        let (a, b) = (grid(i), grid(i + 1));
        if p(a) == 0.0 {
            roots.push(a);
            continue;
        }
        if p(a).signum() != p(b).signum() && p(b) != 0.0 {
            let (mut lo, mut up) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                if p(mid).signum() == p(lo).signum() {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            roots.push(0.5 * (lo + up));
        }
    }
    descending(roots)
}

/// Planted one-shared-signal data with the shared direction `q_x`.
pub fn planted(seed: u64, t: usize, n: usize, gamma_shared: f64) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let mut r = rng(seed);
    let qx = gaussian(&mut r, 1, n);
    let qy = gaussian(&mut r, 1, n);
    let p = gaussian(&mut r, t, 1) * gamma_shared.sqrt();
    let x = gaussian(&mut r, t, n) + &p * &qx;
    let y = gaussian(&mut r, t, n) + &p * &qy;
    (x, y, qx.row(0).transpose())
}
