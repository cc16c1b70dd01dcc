use serde::{Deserialize, Serialize};

use crate::dr::{covariance_blocks, singular_spectrum};
use crate::error::Result;
use crate::experiments::spec::SpectrumSpec;
use crate::model::{generate_dataset_with, sample_quenched, ModelParams, QuenchedProjections, Standardize};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Leading singular values of `C_XX`, descending.
    pub c_xx: Vec<f64>,
    /// Leading singular values of `C_XY`, descending.
    pub c_xy: Vec<f64>,
}

impl SpectrumResult {
    /// `s_i / s_{i+1}` of the `C_XY` spectrum (1-based `i`).
    pub fn cross_gap(&self, i: usize) -> f64 {
        self.c_xy[i - 1] / self.c_xy[i]
    }
}

pub fn run_spectrum_analysis(params: &ModelParams, proj: &QuenchedProjections, seed: u64, n_top: usize) -> Result<SpectrumResult> {
    run_spectrum_analysis_with(params, proj, seed, n_top, Standardize::default())
}

pub fn run_spectrum_analysis_with(
    params: &ModelParams,
    proj: &QuenchedProjections,
    seed: u64,
    n_top: usize,
    opts: Standardize,
) -> Result<SpectrumResult> {
    let data = generate_dataset_with(params, proj, seed, opts)?;
    let b = covariance_blocks(&data.x, &data.y)?;
    let mut c_xx = singular_spectrum(&b.c_xx);
    let mut c_xy = singular_spectrum(&b.c_xy);
    c_xx.truncate(n_top);
    c_xy.truncate(n_top);
    Ok(SpectrumResult { c_xx, c_xy })
}

/// Draw the projections and one dataset from the spec's master seed.
pub fn run_spectrum(spec: &SpectrumSpec) -> Result<SpectrumResult> {
    spec.params.validate()?;
    let proj = sample_quenched(&spec.params, derive_seed(spec.master_seed, "quenched", &[0]))?;
    run_spectrum_analysis_with(
        &spec.params,
        &proj,
        derive_seed(spec.master_seed, "spectrum", &[0]),
        spec.n_top,
        Standardize { center: spec.center },
    )
}
