//! Pair-by-pair extraction with two-sided deflation, carried out on the
//! covariance blocks rather than the data matrices.
//!
//! Deflating by the X score `t = X⁽ⁱ⁾w` replaces `X⁽ⁱ⁾` with
//! `(I − t tᵀ/tᵀt) X⁽ⁱ⁾`. Every quantity the update needs (`X⁽ⁱ⁾ᵀt`,
//! `tᵀt`, `tᵀu`, ...) is a product of the current blocks with `w` and `v`,
//! so the `T × N` matrices are never touched after the blocks are formed.

use nalgebra::{DMatrix, DVector};

use crate::dr::blocks::CovarianceBlocks;
use crate::dr::projection::{DirectionDiagnostics, ProjectionPair};
use crate::dr::Method;
use crate::error::Result;
use crate::linalg::{fix_sign, orthogonal_completion, stack_columns};

/// Current deflated blocks plus the bookkeeping needed to map deflated
/// weights back to the original coordinates.
pub(crate) struct Deflation {
    pub cxx: DMatrix<f64>,
    pub cyy: DMatrix<f64>,
    pub cxy: DMatrix<f64>,
    pub rot_x: Vec<DVector<f64>>,
    pub rot_y: Vec<DVector<f64>>,
    load_x: Vec<DVector<f64>>,
    load_y: Vec<DVector<f64>>,
    /// Mean diagonal of the original blocks.
    pub scale_x: f64,
    pub scale_y: f64,
    /// `u` of the last step's downdate `C ← C − u uᵀ`, if one was applied.
    pub last_x: Option<DVector<f64>>,
    pub last_y: Option<DVector<f64>>,
}

/// Solution of one deflated subproblem.
pub(crate) struct Solved {
    pub w: DVector<f64>,
    pub v: DVector<f64>,
    pub score: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) trait DirectionSolver {
    /// `Ok(None)` when the deflated problem has nothing left to extract.
    fn solve(&mut self, state: &Deflation) -> Result<Option<Solved>>;
}

pub(crate) struct Extraction {
    pub weights_x: Vec<DVector<f64>>,
    pub weights_y: Vec<DVector<f64>>,
    pub rot_x: Vec<DVector<f64>>,
    pub rot_y: Vec<DVector<f64>>,
    pub scores: Vec<f64>,
    pub diagnostics: Vec<DirectionDiagnostics>,
}

const SCORE_VARIANCE_TOL: f64 = 1e-13;

fn rotation(rots: &[DVector<f64>], loads: &[DVector<f64>], w: &DVector<f64>) -> DVector<f64> {
    let mut r = w.clone();
    for (rs, ps) in rots.iter().zip(loads) {
        let c = ps.dot(w);
        if c != 0.0 {
            r.axpy(-c, rs, 1.0);
        }
    }
    r
}

impl Deflation {
    pub fn new(blocks: &CovarianceBlocks) -> Self {
        let mean_diag = |m: &DMatrix<f64>| (m.trace() / m.nrows().max(1) as f64).abs();
        Deflation {
            cxx: blocks.c_xx.clone(),
            cyy: blocks.c_yy.clone(),
            cxy: blocks.c_xy.clone(),
            rot_x: Vec::new(),
            rot_y: Vec::new(),
            load_x: Vec::new(),
            load_y: Vec::new(),
            scale_x: mean_diag(&blocks.c_xx),
            scale_y: mean_diag(&blocks.c_yy),
            last_x: None,
            last_y: None,
        }
    }

    /// Regress the current scores out of both blocks.
    fn deflate(&mut self, w: &DVector<f64>, v: &DVector<f64>) {
        self.rot_x.push(rotation(&self.rot_x, &self.load_x, w));
        self.rot_y.push(rotation(&self.rot_y, &self.load_y, v));

        let a = &self.cxx * w;
        let alpha = w.dot(&a);
        let b = &self.cyy * v;
        let beta = v.dot(&b);
        let cxu = &self.cxy * v;
        let cyt = self.cxy.tr_mul(w);
        let gamma = w.dot(&cxu);

        let x_ok = alpha > SCORE_VARIANCE_TOL * self.scale_x.max(f64::MIN_POSITIVE);
        let y_ok = beta > SCORE_VARIANCE_TOL * self.scale_y.max(f64::MIN_POSITIVE);

        if x_ok {
            self.cxy.ger(-1.0 / alpha, &a, &cyt, 1.0);
        }
        if y_ok {
            self.cxy.ger(-1.0 / beta, &cxu, &b, 1.0);
        }
        if x_ok && y_ok {
            self.cxy.ger(gamma / (alpha * beta), &a, &b, 1.0);
        }
        self.last_x = None;
        self.last_y = None;
        if x_ok {
            self.cxx.ger(-1.0 / alpha, &a, &a, 1.0);
            self.last_x = Some(&a / alpha.sqrt());
            self.load_x.push(a / alpha);
        } else {
            self.load_x.push(DVector::zeros(w.len()));
        }
        if y_ok {
            self.cyy.ger(-1.0 / beta, &b, &b, 1.0);
            self.last_y = Some(&b / beta.sqrt());
            self.load_y.push(b / beta);
        } else {
            self.load_y.push(DVector::zeros(v.len()));
        }
    }
}

pub(crate) fn extract<S: DirectionSolver>(blocks: &CovarianceBlocks, k: usize, solver: &mut S) -> Result<Extraction> {
    let (nx, ny) = (blocks.n_x(), blocks.n_y());
    let mut state = Deflation::new(blocks);
    let mut out = Extraction {
        weights_x: Vec::with_capacity(k),
        weights_y: Vec::with_capacity(k),
        rot_x: Vec::new(),
        rot_y: Vec::new(),
        scores: Vec::with_capacity(k),
        diagnostics: Vec::with_capacity(k),
    };
    for _ in 0..k {
        let (mut w, mut v, score, diag) = match solver.solve(&state)? {
            Some(s) => (
                s.w,
                s.v,
                s.score,
                DirectionDiagnostics { iterations: s.iterations, converged: s.converged, rank_exhausted: false },
            ),
            None => (
                orthogonal_completion(&out.weights_x, nx),
                orthogonal_completion(&out.weights_y, ny),
                0.0,
                DirectionDiagnostics { iterations: 0, converged: true, rank_exhausted: true },
            ),
        };
        if fix_sign(&mut w) < 0.0 {
            v.neg_mut();
        }
        if diag.rank_exhausted {
            fix_sign(&mut v);
        }
        state.deflate(&w, &v);
        out.weights_x.push(w);
        out.weights_y.push(v);
        out.scores.push(score);
        out.diagnostics.push(diag);
    }
    out.rot_x = state.rot_x;
    out.rot_y = state.rot_y;
    Ok(out)
}

fn max_offdiag_gram(cols: &[DVector<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            worst = worst.max(cols[i].dot(&cols[j]).abs());
        }
    }
    worst
}

/// Build the projection pair from the first `k` extracted directions,
/// ordered by non-increasing score (stable).
pub(crate) fn assemble(method: Method, ex: &Extraction, k: usize, c_x: f64, c_y: f64) -> ProjectionPair {
    let k = k.min(ex.scores.len());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| ex.scores[j].total_cmp(&ex.scores[i]).then(i.cmp(&j)));
    let pick = |v: &[DVector<f64>]| order.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
    let (wx, wy, rx, ry) = (pick(&ex.weights_x), pick(&ex.weights_y), pick(&ex.rot_x), pick(&ex.rot_y));
    let nx = ex.weights_x.first().map_or(0, |v| v.len());
    let ny = ex.weights_y.first().map_or(0, |v| v.len());
    ProjectionPair {
        method,
        w_x: stack_columns(&rx, nx),
        w_y: stack_columns(&ry, ny),
        weights_x: stack_columns(&wx, nx),
        weights_y: stack_columns(&wy, ny),
        scores: order.iter().map(|&i| ex.scores[i]).collect(),
        scores_y: None,
        diagnostics: order.iter().map(|&i| ex.diagnostics[i]).collect(),
        c_x,
        c_y,
        weight_gram_deviation: (max_offdiag_gram(&wx), max_offdiag_gram(&wy)),
    }
}
