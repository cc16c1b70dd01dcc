//! Fixtures shared by the benchmarks.

use nalgebra::DMatrix;
use sdrbench_core::model::{generate_dataset, params_from_snr, sample_quenched};
use sdrbench_core::{ModelParams, Result};

/// A planted dataset at `γ_self = γ_shared = 1` with `n` features per view.
pub fn dataset(n: usize, t: usize, seed: u64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let base = ModelParams { n_x: n, n_y: n, t, ..Default::default() };
    let params = params_from_snr(&base, 1.0, 1.0)?;
    let proj = sample_quenched(&params, seed)?;
    let d = generate_dataset(&params, &proj, seed.wrapping_add(1))?;
    Ok((d.x, d.y))
}
