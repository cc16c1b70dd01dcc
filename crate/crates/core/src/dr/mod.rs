//! Linear dimensionality reduction: PCA, canonical PLS, CCA and
//! affine-regularized CCA.

mod blocks;
mod cca;
mod config;
mod deflate;
mod pca;
mod pls;
mod projection;
mod spectrum;

use nalgebra::DMatrix;

pub use blocks::{covariance_blocks, second_moment, CovarianceAccumulator, CovarianceBlocks};
pub use cca::{check_whitenable, MAX_CONDITION};
pub use config::{FitConfig, Method, DEFAULT_MAX_ITER, DEFAULT_REGULARIZATION, DEFAULT_TOL};
pub use pca::{fit_pca, fit_pca_cov, fit_pca_deflated, PcaFit};
pub use projection::{transform, Bundle, DirectionDiagnostics, ProjectionPair};
pub use spectrum::singular_spectrum;

use crate::error::{Error, Result};

/// Fit `cfg.method` on paired data.
pub fn fit(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &FitConfig) -> Result<ProjectionPair> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch { context: "fit rows", expected: x.nrows(), found: y.nrows() });
    }
    cfg.validate(x.ncols(), y.ncols())?;
    match cfg.method {
        Method::Pca => Ok(pca_pair(fit_pca(x, cfg.k)?, fit_pca(y, cfg.k)?, cfg.k)),
        _ => fit_blocks(&covariance_blocks(x, y)?, cfg),
    }
}

pub fn fit_pls(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &FitConfig) -> Result<ProjectionPair> {
    fit(x, y, &FitConfig { method: Method::Pls, ..cfg.clone() })
}

/// Plain CCA; the regularization fields of `cfg` are ignored.
pub fn fit_cca(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &FitConfig) -> Result<ProjectionPair> {
    fit(x, y, &FitConfig { method: Method::Cca, c_x: 0.0, c_y: 0.0, ..cfg.clone() })
}

pub fn fit_rcca(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &FitConfig) -> Result<ProjectionPair> {
    fit(x, y, &FitConfig { method: Method::Rcca, ..cfg.clone() })
}

/// Fit from precomputed blocks.
pub fn fit_blocks(blocks: &CovarianceBlocks, cfg: &FitConfig) -> Result<ProjectionPair> {
    let mut out = fit_prefixes(blocks, cfg, &[cfg.k])?;
    Ok(out.remove(0))
}

/// Fit once at the largest requested `k` and return the fit for every `k`
/// in `ks`. Extraction is greedy, so the first `k` directions of a larger
/// fit are exactly the directions of a `k`-direction fit.
pub fn fit_prefixes(blocks: &CovarianceBlocks, cfg: &FitConfig, ks: &[usize]) -> Result<Vec<ProjectionPair>> {
    let k_max = ks.iter().copied().max().ok_or_else(|| Error::invalid("empty k list"))?;
    let (nx, ny) = (blocks.n_x(), blocks.n_y());
    for &k in ks {
        FitConfig { k, ..cfg.clone() }.validate(nx, ny)?;
    }
    match cfg.method {
        Method::Pca => {
            let fx = fit_pca_cov(&blocks.c_xx, k_max)?;
            let fy = fit_pca_cov(&blocks.c_yy, k_max)?;
            Ok(ks.iter().map(|&k| pca_pair(truncate(&fx, k), truncate(&fy, k), k)).collect())
        }
        Method::Pls => {
            let mut solver = pls::Nipals { tol: cfg.tol, max_iter: cfg.max_iter };
            let ex = deflate::extract(blocks, k_max, &mut solver)?;
            Ok(ks.iter().map(|&k| deflate::assemble(Method::Pls, &ex, k, 1.0, 1.0)).collect())
        }
        Method::Cca | Method::Rcca => {
            let (c_x, c_y) = if cfg.method == Method::Cca { (0.0, 0.0) } else { (cfg.c_x, cfg.c_y) };
            if c_x == 0.0 {
                check_whitenable(&blocks.c_xx, blocks.t, "x")?;
            }
            if c_y == 0.0 {
                check_whitenable(&blocks.c_yy, blocks.t, "y")?;
            }
            let mut solver = cca::Generalized::new(c_x, c_y);
            let ex = deflate::extract(blocks, k_max, &mut solver)?;
            Ok(ks.iter().map(|&k| deflate::assemble(cfg.method, &ex, k, c_x, c_y)).collect())
        }
    }
}

/// PCA fitted directly on data where it pays off (`T < N` uses the Gram
/// matrix); prefixes as in [`fit_prefixes`].
pub fn fit_pca_prefixes(x: &DMatrix<f64>, y: &DMatrix<f64>, ks: &[usize]) -> Result<Vec<ProjectionPair>> {
    let k_max = ks.iter().copied().max().ok_or_else(|| Error::invalid("empty k list"))?;
    let fx = fit_pca(x, k_max)?;
    let fy = fit_pca(y, k_max)?;
    for &k in ks {
        FitConfig::new(Method::Pca, k).validate(x.ncols(), y.ncols())?;
    }
    Ok(ks.iter().map(|&k| pca_pair(truncate(&fx, k), truncate(&fy, k), k)).collect())
}

fn truncate(f: &PcaFit, k: usize) -> PcaFit {
    PcaFit {
        w: f.w.columns(0, k).into_owned(),
        scores: f.scores[..k].to_vec(),
        iterations: f.iterations[..k].to_vec(),
        converged: f.converged[..k].to_vec(),
        rank_exhausted: f.rank_exhausted[..k].to_vec(),
    }
}

fn pca_pair(fx: PcaFit, fy: PcaFit, k: usize) -> ProjectionPair {
    let diagnostics = (0..k)
        .map(|i| DirectionDiagnostics {
            iterations: fx.iterations[i].max(fy.iterations[i]),
            converged: fx.converged[i] && fy.converged[i],
            rank_exhausted: fx.rank_exhausted[i] || fy.rank_exhausted[i],
        })
        .collect();
    ProjectionPair {
        method: Method::Pca,
        weights_x: fx.w.clone(),
        weights_y: fy.w.clone(),
        w_x: fx.w,
        w_y: fy.w,
        scores: fx.scores,
        scores_y: Some(fy.scores),
        diagnostics,
        c_x: 0.0,
        c_y: 0.0,
        weight_gram_deviation: (0.0, 0.0),
    }
}
