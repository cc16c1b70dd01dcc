use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::cross_product;

/// `(1/T)` second-moment blocks of a paired dataset. No centering is done
/// here; callers pass centered data when they want covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBlocks {
    pub c_xx: DMatrix<f64>,
    pub c_yy: DMatrix<f64>,
    /// `C_XY`; `C_YX` is its transpose.
    pub c_xy: DMatrix<f64>,
    pub t: usize,
}

impl CovarianceBlocks {
    pub fn n_x(&self) -> usize {
        self.c_xx.nrows()
    }

    pub fn n_y(&self) -> usize {
        self.c_yy.nrows()
    }

    pub fn c_yx(&self) -> DMatrix<f64> {
        self.c_xy.transpose()
    }
}

pub fn covariance_blocks(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<CovarianceBlocks> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch { context: "covariance_blocks rows", expected: x.nrows(), found: y.nrows() });
    }
    let mut acc = CovarianceAccumulator::new(x.ncols(), y.ncols());
    acc.add_rows(x, y)?;
    acc.finish()
}

/// Streams row chunks into the second-moment sums so large datasets never
/// need to be materialized as one `f64` matrix.
#[derive(Debug, Clone)]
pub struct CovarianceAccumulator {
    sxx: DMatrix<f64>,
    syy: DMatrix<f64>,
    sxy: DMatrix<f64>,
    rows: usize,
}

impl CovarianceAccumulator {
    pub fn new(n_x: usize, n_y: usize) -> Self {
        CovarianceAccumulator {
            sxx: DMatrix::zeros(n_x, n_x),
            syy: DMatrix::zeros(n_y, n_y),
            sxy: DMatrix::zeros(n_x, n_y),
            rows: 0,
        }
    }

    pub fn add_rows(&mut self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != y.nrows() {
            return Err(Error::DimensionMismatch { context: "chunk rows", expected: x.nrows(), found: y.nrows() });
        }
        if x.ncols() != self.sxx.nrows() {
            return Err(Error::DimensionMismatch { context: "x columns", expected: self.sxx.nrows(), found: x.ncols() });
        }
        if y.ncols() != self.syy.nrows() {
            return Err(Error::DimensionMismatch { context: "y columns", expected: self.syy.nrows(), found: y.ncols() });
        }
        let xt = x.transpose();
        let yt = y.transpose();
        self.sxx.gemm(1.0, &xt, x, 1.0);
        self.syy.gemm(1.0, &yt, y, 1.0);
        self.sxy.gemm(1.0, &xt, y, 1.0);
        self.rows += x.nrows();
        Ok(())
    }

    pub fn finish(self) -> Result<CovarianceBlocks> {
        if self.rows == 0 {
            return Err(Error::invalid("no rows accumulated"));
        }
        let inv = 1.0 / self.rows as f64;
        let mut c_xx = self.sxx * inv;
        let mut c_yy = self.syy * inv;
        symmetrize(&mut c_xx);
        symmetrize(&mut c_yy);
        Ok(CovarianceBlocks { c_xx, c_yy, c_xy: self.sxy * inv, t: self.rows })
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `(1/T) XᵀX` for a single modality.
pub fn second_moment(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = cross_product(x, x) / x.nrows() as f64;
    symmetrize(&mut c);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_arguments_give_equal_blocks() {
        let x = DMatrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let b = covariance_blocks(&x, &x).unwrap();
        assert_eq!(b.c_xy, b.c_xx);
    }

    #[test]
    fn ones_column_has_unit_moment() {
        let x = DMatrix::from_element(9, 1, 1.0);
        let b = covariance_blocks(&x, &x).unwrap();
        assert_eq!(b.c_xx, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn row_mismatch_is_an_error() {
        let x = DMatrix::zeros(4, 2);
        let y = DMatrix::zeros(5, 2);
        assert!(matches!(covariance_blocks(&x, &y), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn chunked_accumulation_equals_one_shot() {
        let x = DMatrix::from_fn(10, 3, |i, j| (i as f64 * 0.7 + j as f64).sin());
        let y = DMatrix::from_fn(10, 2, |i, j| (i as f64 * 0.3 - j as f64).cos());
        let whole = covariance_blocks(&x, &y).unwrap();
        let mut acc = CovarianceAccumulator::new(3, 2);
        acc.add_rows(&x.rows(0, 4).into_owned(), &y.rows(0, 4).into_owned()).unwrap();
        acc.add_rows(&x.rows(4, 6).into_owned(), &y.rows(4, 6).into_owned()).unwrap();
        let parts = acc.finish().unwrap();
        assert!((whole.c_xx - parts.c_xx).abs().max() < 1e-14);
        assert!((whole.c_xy - parts.c_xy).abs().max() < 1e-14);
        assert_eq!(parts.t, 10);
    }
}
