use nalgebra::{DMatrix, DVector};

use crate::dr::blocks::second_moment;
use crate::error::{Error, Result};
use crate::linalg::{fix_sign, orthogonal_completion, stack_columns, sym_eigen_desc};

/// Leading eigenvectors of one modality's second-moment matrix.
#[derive(Debug, Clone)]
pub struct PcaFit {
    /// `n × k`, orthonormal columns.
    pub w: DMatrix<f64>,
    /// Eigenvalues of `(1/T) XᵀX`, non-increasing.
    pub scores: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub rank_exhausted: Vec<bool>,
}

const RANK_TOL: f64 = 1e-12;

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("PCA needs 1 <= k <= {n}, got {k}")));
    }
    Ok(())
}

/// Top-`k` principal directions of `x` (rows are samples).
///
/// When there are fewer samples than features the eigenproblem is solved on
/// the `T × T` Gram matrix instead, which yields the same nonzero spectrum.
pub fn fit_pca(x: &DMatrix<f64>, k: usize) -> Result<PcaFit> {
    let (t, n) = x.shape();
    check_k(k, n)?;
    if t >= n {
        return fit_pca_cov(&second_moment(x), k);
    }
    let xt = x.transpose();
    let gram = (x * &xt) / t as f64;
    let (values, vectors) = sym_eigen_desc(&gram);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    let mut exhausted = Vec::with_capacity(k);
    for i in 0..k {
        let lambda = values.get(i).copied().unwrap_or(0.0);
        if i < t && lambda > RANK_TOL * top && lambda > 0.0 {
            let mut w = &xt * vectors.column(i);
            w /= (t as f64 * lambda).sqrt();
            fix_sign(&mut w);
            cols.push(w);
            scores.push(lambda);
            exhausted.push(false);
        } else {
            let mut w = orthogonal_completion(&cols, n);
            fix_sign(&mut w);
            cols.push(w);
            scores.push(0.0);
            exhausted.push(true);
        }
    }
    Ok(PcaFit { w: stack_columns(&cols, n), scores, iterations: vec![1; k], converged: vec![true; k], rank_exhausted: exhausted })
}

/// Top-`k` eigenvectors of a symmetric second-moment matrix.
pub fn fit_pca_cov(c: &DMatrix<f64>, k: usize) -> Result<PcaFit> {
    let n = c.nrows();
    check_k(k, n)?;
    let (values, vectors) = sym_eigen_desc(c);
    let top = values[0].max(0.0);
    let mut w = DMatrix::zeros(n, k);
    let mut scores = Vec::with_capacity(k);
    let mut exhausted = Vec::with_capacity(k);
    for i in 0..k {
        let mut v = vectors.column(i).into_owned();
        fix_sign(&mut v);
        w.set_column(i, &v);
        let lambda = values[i].max(0.0);
        exhausted.push(lambda <= RANK_TOL * top);
        scores.push(lambda);
    }
    Ok(PcaFit { w, scores, iterations: vec![1; k], converged: vec![true; k], rank_exhausted: exhausted })
}

/// PCA by repeated power iteration on the deflated matrix
/// `X⁽ⁱ⁺¹⁾ = X − Σ X w_s w_sᵀ`, i.e. `C⁽ⁱ⁺¹⁾ = (I − WWᵀ) C (I − WWᵀ)`.
pub fn fit_pca_deflated(c: &DMatrix<f64>, k: usize, tol: f64, max_iter: usize) -> Result<PcaFit> {
    let n = c.nrows();
    check_k(k, n)?;
    let mut deflated = c.clone();
    let scale = c.trace().abs().max(f64::MIN_POSITIVE);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut fit = PcaFit {
        w: DMatrix::zeros(n, k),
        scores: Vec::with_capacity(k),
        iterations: Vec::with_capacity(k),
        converged: Vec::with_capacity(k),
        rank_exhausted: Vec::with_capacity(k),
    };
    for _ in 0..k {
        let start = (0..n)
            .max_by(|&a, &b| deflated[(a, a)].total_cmp(&deflated[(b, b)]).then(b.cmp(&a)))
            .unwrap_or(0);
        let mut w = deflated.column(start).into_owned();
        let norm = w.norm();
        let (mut iters, mut converged) = (0, false);
        if norm <= RANK_TOL * scale {
            let mut v = orthogonal_completion(&cols, n);
            fix_sign(&mut v);
            fit.scores.push(0.0);
            fit.iterations.push(0);
            fit.converged.push(true);
            fit.rank_exhausted.push(true);
            cols.push(v);
            continue;
        }
        w /= norm;
        while iters < max_iter {
            iters += 1;
            let mut next = &deflated * &w;
            let nn = next.norm();
            if nn == 0.0 {
                break;
            }
            next /= nn;
            // Fix orientation between sweeps so the update norm is meaningful.
            if next.dot(&w) < 0.0 {
                next.neg_mut();
            }
            let delta = (&next - &w).norm();
            w = next;
            if delta < tol {
                converged = true;
                break;
            }
        }
        fix_sign(&mut w);
        let lambda = w.dot(&(&deflated * &w)).max(0.0);
        let proj = DMatrix::identity(n, n) - &w * w.transpose();
        deflated = &proj * deflated * &proj;
        fit.scores.push(lambda);
        fit.iterations.push(iters);
        fit.converged.push(converged);
        fit.rank_exhausted.push(false);
        cols.push(w);
    }
    fit.w = stack_columns(&cols, n);
    Ok(fit)
}
