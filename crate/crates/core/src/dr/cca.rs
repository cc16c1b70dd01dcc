//! CCA and affine-regularized CCA.
//!
//! Each deflated subproblem maximizes `wᵀC_xy v / sqrt(wᵀA w · vᵀB v)` with
//! `A = (1 − c_x) C_xx + c_x I` (and `B` likewise). With `A = LLᵀ` and
//! `B = MMᵀ` this is the leading singular pair of `L⁻¹ C_xy M⁻ᵀ`.
//!
//! For `c = 0` the deflated `C_xx` is singular, with null space spanned by
//! the previous rotations. Adding a multiple of the projector onto that span
//! makes `A` invertible without moving the maximizer: null directions add
//! to the denominator and not to the numerator.
//!
//! Small blocks take a full SVD per direction. Wider blocks keep explicit
//! inverse factors `W⁻¹` with `A = WWᵀ`, fold each deflation into them as a
//! rank-one update, and find the leading pair of `W_x⁻¹ C_xy W_y⁻ᵀ` by
//! Lanczos.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::dr::deflate::{Deflation, DirectionSolver, Solved};
use crate::error::{Error, Result};
use crate::linalg::{fix_sign, lexicographic_cmp, orthonormal_basis, sym_eigen_desc};
use crate::rng::stream_rng;

/// Condition number above which plain CCA refuses to whiten.
pub const MAX_CONDITION: f64 = 1e12;

const EXHAUSTED: f64 = 1e-10;
const TIE_TOL: f64 = 1e-12;

/// Fail unless `c` can be whitened: more samples than features and a
/// condition number at most [`MAX_CONDITION`].
pub fn check_whitenable(c: &DMatrix<f64>, t: usize, modality: &'static str) -> Result<()> {
    let n = c.nrows();
    if t <= n {
        return Err(Error::SingularCovariance { modality, reason: format!("T = {t} <= N = {n}") });
    }
    let (values, _) = sym_eigen_desc(c);
    let (hi, lo) = (values[0], values[n - 1]);
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::SingularCovariance {
            modality,
            reason: format!("condition number {:.3e} exceeds {MAX_CONDITION:e}", hi / lo),
        });
    }
    Ok(())
}

/// Widest block (smaller side) solved by a dense SVD per direction.
pub(crate) const DENSE_LIMIT: usize = 256;
/// Directions between full refactorizations of the inverse factors.
const REFRESH_EVERY: usize = 16;
const LANCZOS_TOL: f64 = 1e-12;

pub(crate) struct Generalized {
    c_x: f64,
    c_y: f64,
    dense_limit: usize,
    factors: Option<(InverseFactor, InverseFactor)>,
}

impl Generalized {
    pub fn new(c_x: f64, c_y: f64) -> Self {
        Generalized { c_x, c_y, dense_limit: DENSE_LIMIT, factors: None }
    }
}

fn regularized(c: &DMatrix<f64>, reg: f64, rotations: &[DVector<f64>], fill: f64) -> DMatrix<f64> {
    let n = c.nrows();
    let mut a = c * (1.0 - reg);
    for i in 0..n {
        a[(i, i)] += reg;
    }
    if reg == 0.0 && !rotations.is_empty() {
        for q in orthonormal_basis(rotations, n) {
            a.ger(fill, &q, &q, 1.0);
        }
    }
    a
}

fn factor(a: DMatrix<f64>, modality: &'static str) -> Result<DMatrix<f64>> {
    Cholesky::new(a)
        .map(|c| c.l())
        .ok_or_else(|| Error::SingularCovariance { modality, reason: "regularized block is not positive definite".into() })
}

/// `W⁻¹` for one side, tracking the regularized deflated block.
struct InverseFactor {
    inv: DMatrix<f64>,
    /// Orthonormal basis of the rotations filled in so far (`c = 0` only).
    basis: Vec<DVector<f64>>,
    seen: usize,
    since_refresh: usize,
}

impl InverseFactor {
    fn fresh(c: &DMatrix<f64>, reg: f64, rotations: &[DVector<f64>], fill: f64, modality: &'static str) -> Result<Self> {
        let n = c.nrows();
        let l = factor(regularized(c, reg, rotations, fill), modality)?;
        let inv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::SingularCovariance { modality, reason: "triangular inverse failed".into() })?;
        let basis = if reg == 0.0 { orthonormal_basis(rotations, n) } else { Vec::new() };
        Ok(InverseFactor { inv, basis, seen: rotations.len(), since_refresh: 0 })
    }

    /// Fold `A ← A + s u uᵀ` in; `false` if `A` would lose definiteness.
    ///
    /// With `p = W⁻¹u`, `I + s ppᵀ = (I + β ppᵀ)²`, so `W' = W(I + β ppᵀ)`.
    fn update(&mut self, u: &DVector<f64>, s: f64) -> bool {
        let p = &self.inv * u;
        let pp = p.norm_squared();
        if pp == 0.0 {
            return true;
        }
        let disc = 1.0 + s * pp;
        if !(disc > 1e-10) {
            return false;
        }
        let beta = (disc.sqrt() - 1.0) / pp;
        let gamma = beta / (1.0 + beta * pp);
        let row = self.inv.tr_mul(&p);
        self.inv.ger(-gamma, &p, &row, 1.0);
        true
    }

    /// Catch up with one deflation step. `false` asks for a refresh.
    fn advance(&mut self, reg: f64, rotations: &[DVector<f64>], last: Option<&DVector<f64>>, fill: f64) -> bool {
        if rotations.len() != self.seen + 1 || self.since_refresh + 1 >= REFRESH_EVERY {
            return false;
        }
        self.seen += 1;
        self.since_refresh += 1;
        if reg == 0.0 {
            let r = &rotations[self.seen - 1];
            let scale = r.norm();
            if scale > 0.0 {
                let mut q = r / scale;
                for _ in 0..2 {
                    for b in &self.basis {
                        let d = b.dot(&q);
                        q.axpy(-d, b, 1.0);
                    }
                }
                let norm = q.norm();
                if norm > 1e-10 {
                    q /= norm;
                    if !self.update(&q, fill) {
                        return false;
                    }
                    self.basis.push(q);
                }
            }
        }
        match last {
            Some(u) if reg < 1.0 => self.update(u, -(1.0 - reg)),
            _ => true,
        }
    }
}

impl Generalized {
    fn solve_dense(&mut self, state: &Deflation) -> Result<Option<Solved>> {
        let a = regularized(&state.cxx, self.c_x, &state.rot_x, state.scale_x.max(f64::MIN_POSITIVE));
        let b = regularized(&state.cyy, self.c_y, &state.rot_y, state.scale_y.max(f64::MIN_POSITIVE));
        let l = factor(a, "x")?;
        let m = factor(b, "y")?;

        let lk = l
            .solve_lower_triangular(&state.cxy)
            .ok_or_else(|| Error::SingularCovariance { modality: "x", reason: "triangular solve failed".into() })?;
        let kt = m
            .solve_lower_triangular(&lk.transpose())
            .ok_or_else(|| Error::SingularCovariance { modality: "y", reason: "triangular solve failed".into() })?;
        let k = kt.transpose();

        let svd = k.svd(true, true);
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::Inconsistent("SVD did not return singular vectors".into())),
        };
        let sv = &svd.singular_values;
        let top = sv.iter().copied().fold(0.0f64, f64::max);
        if top <= EXHAUSTED {
            return Ok(None);
        }

        let back = |j: usize| -> Option<(DVector<f64>, DVector<f64>)> {
            let w = l.tr_solve_lower_triangular(&u.column(j).into_owned())?;
            let v = m.tr_solve_lower_triangular(&vt.row(j).transpose())?;
            normalized_pair(w, v)
        };

        let mut best: Option<(DVector<f64>, DVector<f64>)> = None;
        for j in 0..sv.len() {
            if sv[j] < top * (1.0 - TIE_TOL) {
                continue;
            }
            if let Some(cand) = back(j) {
                let better = match &best {
                    None => true,
                    Some((bw, _)) => lexicographic_cmp(&cand.0, bw).is_gt(),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (w, v) = best.ok_or_else(|| Error::Inconsistent("could not back-transform leading pair".into()))?;
        Ok(Some(Solved { w, v, score: top, iterations: 1, converged: true }))
    }

    fn solve_lanczos(&mut self, state: &Deflation) -> Result<Option<Solved>> {
        let (fx, fy) = (state.scale_x.max(f64::MIN_POSITIVE), state.scale_y.max(f64::MIN_POSITIVE));
        let current = match self.factors.as_mut() {
            Some((x, y)) => {
                x.advance(self.c_x, &state.rot_x, state.last_x.as_ref(), fx)
                    && y.advance(self.c_y, &state.rot_y, state.last_y.as_ref(), fy)
            }
            None => false,
        };
        if !current {
            self.factors = Some((
                InverseFactor::fresh(&state.cxx, self.c_x, &state.rot_x, fx, "x")?,
                InverseFactor::fresh(&state.cyy, self.c_y, &state.rot_y, fy, "y")?,
            ));
        }
        let (x, y) = self.factors.as_ref().expect("factors just set");

        let k = (&x.inv * &state.cxy) * y.inv.transpose();
        let (top, u, v, iterations, converged) = top_singular_pair(&k);
        if top <= EXHAUSTED {
            return Ok(None);
        }
        let (w, v) = normalized_pair(x.inv.tr_mul(&u), y.inv.tr_mul(&v))
            .ok_or_else(|| Error::Inconsistent("could not back-transform leading pair".into()))?;
        Ok(Some(Solved { w, v, score: top, iterations, converged }))
    }
}

fn normalized_pair(mut w: DVector<f64>, mut v: DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let (wn, vn) = (w.norm(), v.norm());
    if wn == 0.0 || vn == 0.0 {
        return None;
    }
    w /= wn;
    v /= vn;
    if fix_sign(&mut w) < 0.0 {
        v.neg_mut();
    }
    Some((w, v))
}

/// Leading singular triplet of `k` by Lanczos on the smaller Gram matrix.
fn top_singular_pair(k: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>, usize, bool) {
    let (m, n) = k.shape();
    let right = n <= m;
    let gram = |x: &DVector<f64>| if right { k.tr_mul(&(k * x)) } else { k * k.tr_mul(x) };
    let (theta, y, iterations, converged) = lanczos_top(gram, m.min(n));
    let sigma = theta.max(0.0).sqrt();
    if sigma == 0.0 {
        return (0.0, DVector::zeros(m), DVector::zeros(n), iterations, converged);
    }
    let (u, v) = if right { (k * &y / sigma, y) } else { let v = k.tr_mul(&y) / sigma; (y, v) };
    (sigma, u, v, iterations, converged)
}

/// Largest eigenpair of a symmetric PSD operator of dimension `n`.
fn lanczos_top(apply: impl Fn(&DVector<f64>) -> DVector<f64>, n: usize) -> (f64, DVector<f64>, usize, bool) {
    let mut rng = stream_rng(0, "lanczos", n as u64);
    let mut q = DVector::from_fn(n, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
    q.normalize_mut();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    loop {
        let mut z = apply(&q);
        alpha.push(q.dot(&z));
        basis.push(q);
        for _ in 0..2 {
            for b in &basis {
                let d = b.dot(&z);
                z.axpy(-d, b, 1.0);
            }
        }
        let b_next = z.norm();
        let dim = basis.len();
        let scale = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let breakdown = b_next <= f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        if dim == n || breakdown || dim.is_multiple_of(4) {
            let t = DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let (values, vectors) = sym_eigen_desc(&t);
            let s = vectors.column(0);
            let residual = b_next * s[dim - 1].abs();
            let done = residual <= LANCZOS_TOL * values[0].abs().max(f64::MIN_POSITIVE);
            if dim == n || breakdown || done {
                let mut y = DVector::zeros(n);
                for (si, b) in s.iter().zip(&basis) {
                    y.axpy(*si, b, 1.0);
                }
                y.normalize_mut();
                return (values[0], y, dim, done || breakdown || dim == n);
            }
        }
        beta.push(b_next);
        q = z / b_next;
    }
}

impl DirectionSolver for Generalized {
    fn solve(&mut self, state: &Deflation) -> Result<Option<Solved>> {
        if state.cxx.nrows().min(state.cyy.nrows()) <= self.dense_limit {
            self.solve_dense(state)
        } else {
            self.solve_lanczos(state)
        }
    }
}
