use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::Serialize;

use sdrbench_core::dr::{fit, Bundle};
use sdrbench_core::experiments::{
    atomic_write, run_dimension_sweep, run_noise_floor_map, run_phase_diagram, run_spectrum, with_workers,
    ExperimentKind, GridResult, SpectrumResult, SpectrumSpec,
};
use sdrbench_core::mnist::{
    build_dataset_cached, correlation_histograms, default_data_dir, run_mnist_sweep, MnistSpec, SampleSize,
};
use sdrbench_core::model::{read_matrix_csv, write_matrix_csv};
use sdrbench_core::{FitConfig, Method};

use crate::config::{load_config_with, ConfigError, ExperimentSpec, PresetName, RunConfig};
use crate::download::ensure_mnist;
use crate::plot::{render_curves, render_heatmap, render_histogram, render_spectrum, PlotSpec};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub preset: Option<PresetName>,
}

/// Config for `kind` from the file (if any), the preset and the overrides.
pub fn resolve(kind: ExperimentKind, g: &Globals) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &g.config {
        Some(path) => {
            let cfg = load_config_with(path, g.preset)?;
            if cfg.kind() != kind {
                return Err(ConfigError::new(
                    path.display().to_string(),
                    format!("config is for experiment {} but the subcommand is {kind}", cfg.kind()),
                ));
            }
            cfg
        }
        None => RunConfig::from_preset(kind, g.preset.unwrap_or_default()),
    };
    if let Some(seed) = g.seed {
        cfg.spec.set_seed(seed);
    }
    if g.out.is_some() {
        cfg.out = g.out.clone();
    }
    if g.workers.is_some() {
        cfg.workers = g.workers;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("sdrbench-out").join(cfg.kind().as_str()))
}

fn revalidate(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.spec.validate().map_err(|e| ConfigError::new("command line", e.to_string()))
}

/// Run an experiment subcommand and return the files written.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    revalidate(cfg)?;
    let out = out_dir(cfg);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();
    let config_path = out.join("config.toml");
    atomic_write(&config_path, cfg.to_toml().as_bytes())?;
    written.push(config_path);

    match &cfg.spec {
        ExperimentSpec::PhaseDiagram(spec) => {
            let grid = with_workers(cfg.workers, || run_phase_diagram(spec))??;
            written.extend(save_grid(&grid, &out)?);
            written.extend(phase_heatmaps(&grid, &out)?);
        }
        ExperimentSpec::DimSweep(spec) => {
            let grid = with_workers(cfg.workers, || run_dimension_sweep(spec))??;
            written.extend(save_grid(&grid, &out)?);
            let mut plot = PlotSpec::curves("k", "RC′").with_title("RC′ against retained dimensions");
            plot.log_x = true;
            if spec.panels.len() == 9 {
                plot.layout = Some((3, 3));
            }
            let path = out.join("dim_sweep.svg");
            render_curves(&grid, &plot, &path)?;
            written.push(path);
        }
        ExperimentSpec::NoiseFloor(spec) => {
            let grid = with_workers(cfg.workers, || run_noise_floor_map(spec))??;
            written.extend(save_grid(&grid, &out)?);
            let top = grid.rc0.iter().map(|c| c.mean).fold(1.0, f64::max);
            let mut plot = PlotSpec::heatmap("k", "T").with_title("RC₀ of independent Gaussian projections");
            plot.color_max = (top * 4.0).ceil() / 4.0;
            let path = out.join("noise_floor.svg");
            render_heatmap(&grid, &plot, &path)?;
            written.push(path);
        }
        ExperimentSpec::Spectrum(spec) => written.extend(spectrum(spec, &out)?),
        ExperimentSpec::Mnist(_) => bail!("use run_mnist for the mnist experiment"),
    }
    Ok(written)
}

fn save_grid(grid: &GridResult, out: &Path) -> Result<Vec<PathBuf>> {
    grid.save(out)?;
    Ok(vec![out.join("results.csv"), out.join("grid.json")])
}

/// The records of one training size, re-aggregated.
pub fn slice_t(grid: &GridResult, t: usize) -> GridResult {
    let records = grid.records.iter().filter(|r| r.t == t).cloned().collect();
    GridResult::from_parts(grid.kind, grid.axes.clone(), records, grid.rc0.clone(), grid.metadata.clone())
}

fn phase_heatmaps(grid: &GridResult, out: &Path) -> Result<Vec<PathBuf>> {
    let mut ts: Vec<usize> = grid.cells.iter().map(|c| c.t).collect();
    ts.sort_unstable();
    ts.dedup();
    let mut written = Vec::new();
    for t in ts {
        let slice = slice_t(grid, t);
        let mut plot = PlotSpec::heatmap("γ_self", "γ_shared").with_title(&format!("RC′ at T = {t}"));
        plot.noise_panel = true;
        let panels = slice.methods().len() + 1;
        let ks = slice.cells.iter().map(|c| (c.method, c.k)).collect::<std::collections::BTreeSet<_>>().len();
        if ks + 1 == panels {
            plot.layout = Some((1, panels));
        }
        let path = out.join(format!("phase_diagram_T{t}.svg"));
        render_heatmap(&slice, &plot, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Serialize)]
struct SpectrumFile<'a> {
    spec: &'a SpectrumSpec,
    result: &'a SpectrumResult,
}

fn spectrum(spec: &SpectrumSpec, out: &Path) -> Result<Vec<PathBuf>> {
    let result = run_spectrum(spec)?;
    let mut csv = String::from("index,c_xx,c_xy\n");
    for i in 0..result.c_xx.len().max(result.c_xy.len()) {
        let cell = |v: &[f64]| v.get(i).map(|x| format!("{x:.16e}")).unwrap_or_default();
        csv.push_str(&format!("{},{},{}\n", i + 1, cell(&result.c_xx), cell(&result.c_xy)));
    }
    let csv_path = out.join("spectrum.csv");
    atomic_write(&csv_path, csv.as_bytes())?;
    let json_path = out.join("spectrum.json");
    atomic_write(&json_path, &serde_json::to_vec_pretty(&SpectrumFile { spec, result: &result })?)?;
    let svg_path = out.join("spectrum.svg");
    render_spectrum(&result, &PlotSpec::spectrum().with_title("Singular values"), &svg_path)?;
    Ok(vec![csv_path, json_path, svg_path])
}

/// Options only the `mnist` subcommand takes.
#[derive(Debug, Clone, Default)]
pub struct MnistOptions {
    pub data_dir: Option<PathBuf>,
    pub t: Option<Vec<SampleSize>>,
    pub k: Option<Vec<usize>>,
    pub offline: bool,
    pub mirror: String,
    pub bins: usize,
}

/// Apply command-line MNIST options to the config.
pub fn apply_mnist_options(cfg: &mut RunConfig, opts: &MnistOptions) -> Result<(), ConfigError> {
    let ExperimentSpec::Mnist(spec) = &mut cfg.spec else {
        return Err(ConfigError::new("command line", "not an mnist config"));
    };
    if let Some(d) = &opts.data_dir {
        spec.data_dir = Some(d.clone());
    }
    if let Some(t) = &opts.t {
        spec.t_list = t.clone();
    }
    if let Some(k) = &opts.k {
        spec.k_grid = k.clone();
    }
    if opts.bins == 0 {
        return Err(ConfigError::new("command line", "--bins must be at least 1"));
    }
    revalidate(cfg)
}

pub fn run_mnist(cfg: &RunConfig, opts: &MnistOptions) -> Result<Vec<PathBuf>> {
    revalidate(cfg)?;
    let ExperimentSpec::Mnist(spec) = &cfg.spec else {
        bail!("not an mnist config");
    };
    let spec: &MnistSpec = spec;
    let data_dir = spec.data_dir.clone().unwrap_or_else(default_data_dir);
    let cache_dir = spec.cache_dir.clone().unwrap_or_else(|| data_dir.clone());
    std::fs::create_dir_all(&data_dir).with_context(|| format!("creating {}", data_dir.display()))?;
    ensure_mnist(&data_dir, &opts.mirror, opts.offline)?;

    let out = out_dir(cfg);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();
    let config_path = out.join("config.toml");
    atomic_write(&config_path, cfg.to_toml().as_bytes())?;
    written.push(config_path);

    let (train, test) = build_dataset_cached(&data_dir, &cache_dir, spec.seed)?;
    log::info!("views built: {} training rows, {} test rows", train.n, test.n);

    let hist = correlation_histograms(&train, opts.bins)?;
    let mut csv = String::from("lower,upper,within_x,within_y,cross\n");
    for i in 0..hist.x_self.len() {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{},{},{}\n",
            hist.edges[i],
            hist.edges[i + 1],
            hist.x_self[i],
            hist.y_self[i],
            hist.cross[i]
        ));
    }
    let hist_csv = out.join("histograms.csv");
    atomic_write(&hist_csv, csv.as_bytes())?;
    let hist_svg = out.join("histograms.svg");
    render_histogram(&hist, &PlotSpec::histogram().with_title("Column-pair correlations, training views"), &hist_svg)?;
    written.extend([hist_csv, hist_svg]);

    let grid = with_workers(cfg.workers, || {
        run_mnist_sweep(&train, &test, &spec.methods, &spec.k_grid, &spec.t_list, spec.seed, spec.rc0_trials)
    })??;
    written.extend(save_grid(&grid, &out)?);
    let mut plot = PlotSpec::curves("k", "RC′").with_title("Noisy MNIST: bias-corrected total correlation");
    plot.log_x = true;
    let path = out.join("mnist.svg");
    render_curves(&grid, &plot, &path)?;
    written.push(path);
    Ok(written)
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_matrix_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub x: PathBuf,
    pub y: PathBuf,
    pub method: Method,
    pub k: usize,
    pub c_x: f64,
    pub c_y: f64,
}

/// Fit one method on two CSV matrices and write `projection.json`.
pub fn run_fit(opts: &FitOptions, out: &Path) -> Result<PathBuf> {
    let x = read_matrix(&opts.x)?;
    let y = read_matrix(&opts.y)?;
    let cfg = FitConfig::new(opts.method, opts.k).with_regularization(opts.c_x, opts.c_y);
    cfg.validate(x.ncols(), y.ncols()).map_err(|e| ConfigError::new("command line", e.to_string()))?;
    let pair = fit(&x, &y, &cfg)?;
    let mut buf = Vec::new();
    pair.write_bundle(&mut buf)?;
    let path = out.join("projection.json");
    atomic_write(&path, &buf)?;
    let scores: Vec<String> = pair.scores.iter().map(|s| format!("{s:.6}")).collect();
    println!("{} k={} scores: {}", opts.method.label(), pair.k(), scores.join(" "));
    Ok(path)
}

/// Apply a saved projection to new rows.
pub fn run_transform(bundle: &Path, x: Option<&Path>, y: Option<&Path>, out: &Path) -> Result<Vec<PathBuf>> {
    if x.is_none() && y.is_none() {
        return Err(ConfigError::new("command line", "transform needs --x, --y or both").into());
    }
    let f = File::open(bundle).with_context(|| format!("opening {}", bundle.display()))?;
    let b = Bundle::read(BufReader::new(f))?;
    let mut written = Vec::new();
    for (input, w, name) in [(x, b.w_x(), "z_x.csv"), (y, b.w_y(), "z_y.csv")] {
        let Some(input) = input else { continue };
        let m = read_matrix(input)?;
        let z = sdrbench_core::dr::transform(&m, &w)?;
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &z, "z")?;
        let path = out.join(name);
        atomic_write(&path, &buf)?;
        written.push(path);
    }
    Ok(written)
}
