use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::stream_rng;

/// Fixed ("quenched") projection matrices shared by every trial drawn from
/// one realization of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedProjections {
    /// `m_self_x × n_x`
    pub v_x: DMatrix<f64>,
    /// `m_self_y × n_y`
    pub v_y: DMatrix<f64>,
    /// `m_shared × n_x`
    pub q_x: DMatrix<f64>,
    /// `m_shared × n_y`
    pub q_y: DMatrix<f64>,
}

/// Column with too little spread to rescale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationWarning {
    pub modality: String,
    pub column: usize,
    pub std: f64,
}

#[derive(Debug, Clone)]
pub struct PairedDataset {
    /// `t × n_x`, standardized.
    pub x: DMatrix<f64>,
    /// `t × n_y`, standardized.
    pub y: DMatrix<f64>,
    /// Planted shared latent, `t × m_shared`.
    pub latent_p: DMatrix<f64>,
    pub latent_u_x: DMatrix<f64>,
    pub latent_u_y: DMatrix<f64>,
    /// Empirical column variances before standardization.
    pub raw_var_x: Vec<f64>,
    pub raw_var_y: Vec<f64>,
    pub warnings: Vec<StandardizationWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Standardize {
    /// Subtract column means before scaling.
    pub center: bool,
}

impl Default for Standardize {
    fn default() -> Self {
        Standardize { center: true }
    }
}

/// Columns whose empirical std falls below this are left unscaled.
pub const DEGENERATE_STD: f64 = 1e-12;

pub(crate) fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, sd: f64) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DMatrix::from_vec(rows, cols, data)
}

pub fn sample_quenched(params: &ModelParams, seed: u64) -> Result<QuenchedProjections> {
    params.validate()?;
    let mut rng = stream_rng(seed, "quenched", 0);
    let v_x = gaussian_matrix(&mut rng, params.m_self_x, params.n_x, params.var_v_x.sqrt());
    let v_y = gaussian_matrix(&mut rng, params.m_self_y, params.n_y, params.var_v_y.sqrt());
    let q_x = gaussian_matrix(&mut rng, params.m_shared, params.n_x, params.var_q_x.sqrt());
    let q_y = gaussian_matrix(&mut rng, params.m_shared, params.n_y, params.var_q_y.sqrt());
    Ok(QuenchedProjections { v_x, v_y, q_x, q_y })
}

fn check_shape(context: &'static str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows {
        return Err(Error::DimensionMismatch { context, expected: rows, found: m.nrows() });
    }
    if m.ncols() != cols {
        return Err(Error::DimensionMismatch { context, expected: cols, found: m.ncols() });
    }
    Ok(())
}

impl QuenchedProjections {
    pub fn check(&self, params: &ModelParams) -> Result<()> {
        check_shape("v_x", &self.v_x, params.m_self_x, params.n_x)?;
        check_shape("v_y", &self.v_y, params.m_self_y, params.n_y)?;
        check_shape("q_x", &self.q_x, params.m_shared, params.n_x)?;
        check_shape("q_y", &self.q_y, params.m_shared, params.n_y)
    }
}

pub fn generate_dataset(params: &ModelParams, proj: &QuenchedProjections, seed: u64) -> Result<PairedDataset> {
    generate_dataset_with(params, proj, seed, Standardize::default())
}

/// Draw fresh noise and latents and assemble one standardized paired dataset.
pub fn generate_dataset_with(
    params: &ModelParams,
    proj: &QuenchedProjections,
    seed: u64,
    opts: Standardize,
) -> Result<PairedDataset> {
    params.validate()?;
    proj.check(params)?;
    let t = params.t;

    let latent_p = gaussian_matrix(&mut stream_rng(seed, "latent_p", 0), t, params.m_shared, params.var_p.sqrt());
    let latent_u_x = gaussian_matrix(&mut stream_rng(seed, "latent_u", 0), t, params.m_self_x, params.var_u_x.sqrt());
    let latent_u_y = gaussian_matrix(&mut stream_rng(seed, "latent_u", 1), t, params.m_self_y, params.var_u_y.sqrt());

    let mut x = gaussian_matrix(&mut stream_rng(seed, "noise", 0), t, params.n_x, params.var_r_x.sqrt());
    let mut y = gaussian_matrix(&mut stream_rng(seed, "noise", 1), t, params.n_y, params.var_r_y.sqrt());
    if params.m_self_x > 0 {
        x.gemm(1.0, &latent_u_x, &proj.v_x, 1.0);
    }
    if params.m_self_y > 0 {
        y.gemm(1.0, &latent_u_y, &proj.v_y, 1.0);
    }
    if params.m_shared > 0 {
        x.gemm(1.0, &latent_p, &proj.q_x, 1.0);
        y.gemm(1.0, &latent_p, &proj.q_y, 1.0);
    }

    let mut warnings = Vec::new();
    let raw_var_x = standardize_columns(&mut x, opts, "x", &mut warnings);
    let raw_var_y = standardize_columns(&mut y, opts, "y", &mut warnings);
    for w in &warnings {
        log::warn!("column {} of {} has std {:e}; left unscaled", w.column, w.modality, w.std);
    }

    Ok(PairedDataset { x, y, latent_p, latent_u_x, latent_u_y, raw_var_x, raw_var_y, warnings })
}

/// Scale every column to unit empirical (population) standard deviation,
/// optionally centering first. Returns the pre-scaling column variances.
pub fn standardize_columns(
    m: &mut DMatrix<f64>,
    opts: Standardize,
    modality: &str,
    warnings: &mut Vec<StandardizationWarning>,
) -> Vec<f64> {
    let t = m.nrows() as f64;
    let mut raw = Vec::with_capacity(m.ncols());
    for (j, mut col) in m.column_iter_mut().enumerate() {
        let mean = col.sum() / t;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
        raw.push(var);
        if opts.center {
            col.add_scalar_mut(-mean);
        }
        let sd = var.sqrt();
        if sd < DEGENERATE_STD {
            warnings.push(StandardizationWarning { modality: modality.to_string(), column: j, std: sd });
            continue;
        }
        col /= sd;
    }
    raw
}

/// Write a `t × n` matrix as CSV with header `prefix0..prefix{n-1}`.
pub fn write_matrix_csv<W: Write>(mut out: W, m: &DMatrix<f64>, prefix: &str) -> Result<()> {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("{prefix}{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", m[(i, j)]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Read a CSV matrix with one header row.
pub fn read_matrix_csv<R: std::io::BufRead>(input: R) -> Result<DMatrix<f64>> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::Csv { line: 1, message: "empty file".into() }),
    };
    let ncols = header.split(',').count();
    let mut data = Vec::new();
    let mut nrows = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| Error::Csv {
                line: i + 2,
                message: format!("{field:?}: {e}"),
            })?;
            data.push(v);
        }
        if data.len() - before != ncols {
            return Err(Error::Csv {
                line: i + 2,
                message: format!("expected {ncols} fields, found {}", data.len() - before),
            });
        }
        nrows += 1;
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

impl PairedDataset {
    pub fn write_csv(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let fx = std::io::BufWriter::new(std::fs::File::create(dir.join("x.csv"))?);
        write_matrix_csv(fx, &self.x, "x")?;
        let fy = std::io::BufWriter::new(std::fs::File::create(dir.join("y.csv"))?);
        write_matrix_csv(fy, &self.y, "y")
    }
}
