use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dr::Method;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Deflated problem had nothing left; the direction is an arbitrary
    /// orthogonal completion with score 0.
    pub rank_exhausted: bool,
}

/// A fitted pair of projection stacks.
///
/// `w_x`/`w_y` map *original* data onto the per-direction variates
/// (`Z = X W`). For deflation-based methods these are the rotations implied
/// by the deflation; `weights_x`/`weights_y` keep the unit-norm weight
/// vectors found on each deflated problem. For PCA the two coincide.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub method: Method,
    pub w_x: DMatrix<f64>,
    pub w_y: DMatrix<f64>,
    pub weights_x: DMatrix<f64>,
    pub weights_y: DMatrix<f64>,
    /// Per-direction objective: eigenvalue (PCA, X side), singular value of
    /// the deflated cross-covariance (PLS), or (regularized) correlation.
    pub scores: Vec<f64>,
    /// PCA only: eigenvalues of the Y side.
    pub scores_y: Option<Vec<f64>>,
    pub diagnostics: Vec<DirectionDiagnostics>,
    pub c_x: f64,
    pub c_y: f64,
    /// Largest off-diagonal entry of `weights_xᵀ weights_x` (and Y), reported
    /// rather than enforced.
    pub weight_gram_deviation: (f64, f64),
}

impl ProjectionPair {
    pub fn k(&self) -> usize {
        self.scores.len()
    }

    pub fn transform_x(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        transform(x, &self.w_x)
    }

    pub fn transform_y(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        transform(y, &self.w_y)
    }

    pub fn write_bundle<W: Write>(&self, out: W) -> Result<()> {
        let bundle = Bundle {
            format: BUNDLE_FORMAT.to_string(),
            version: 1,
            method: self.method,
            k: self.k(),
            c_x: self.c_x,
            c_y: self.c_y,
            n_x: self.w_x.nrows(),
            n_y: self.w_y.nrows(),
            w_x: rows_of(&self.w_x),
            w_y: rows_of(&self.w_y),
            scores: self.scores.clone(),
        };
        serde_json::to_writer_pretty(out, &bundle)?;
        Ok(())
    }
}

const BUNDLE_FORMAT: &str = "sdrbench-projection";

/// On-disk form of a fitted projection, enough to re-apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bundle {
    pub format: String,
    pub version: u32,
    pub method: Method,
    pub k: usize,
    pub c_x: f64,
    pub c_y: f64,
    pub n_x: usize,
    pub n_y: usize,
    /// Row-major, `n_x` rows of `k` entries.
    pub w_x: Vec<Vec<f64>>,
    pub w_y: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
}

impl Bundle {
    pub fn read<R: Read>(input: R) -> Result<Bundle> {
        let b: Bundle = serde_json::from_reader(input)?;
        if b.format != BUNDLE_FORMAT || b.version != 1 {
            return Err(Error::Inconsistent(format!("unsupported bundle {} v{}", b.format, b.version)));
        }
        if b.w_x.len() != b.n_x || b.w_y.len() != b.n_y || b.scores.len() != b.k {
            return Err(Error::Inconsistent("bundle shapes disagree with header".into()));
        }
        if b.w_x.iter().chain(b.w_y.iter()).any(|r| r.len() != b.k) {
            return Err(Error::Inconsistent("bundle rows must have k entries".into()));
        }
        Ok(b)
    }

    pub fn w_x(&self) -> DMatrix<f64> {
        from_rows(&self.w_x, self.n_x, self.k)
    }

    pub fn w_y(&self) -> DMatrix<f64> {
        from_rows(&self.w_y, self.n_y, self.k)
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |i, j| rows[i][j])
}

/// `Z = X_test W`.
pub fn transform(x_test: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x_test.ncols() != w.nrows() {
        return Err(Error::DimensionMismatch { context: "transform", expected: w.nrows(), found: x_test.ncols() });
    }
    Ok(x_test * w)
}
