use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use sdrbench_cli::commands::{
    apply_mnist_options, resolve, run_experiment, run_fit, run_mnist, run_transform, FitOptions, Globals, MnistOptions,
};
use sdrbench_cli::config::config_reference;
use sdrbench_cli::download::DEFAULT_MIRROR;
use sdrbench_cli::{exit_code, PresetName};
use sdrbench_core::experiments::{atomic_write, ExperimentKind};
use sdrbench_core::mnist::SampleSize;
use sdrbench_core::Method;

#[derive(Parser)]
#[command(name = "sdrbench", version, about = "Shared-signal recovery benchmark for linear dimensionality reduction")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Master seed, replacing the one in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// paper, ci or custom.
    #[arg(long, global = true)]
    preset: Option<PresetName>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// RC′ over the (γ_self, γ_shared) plane for each method.
    PhaseDiagram,
    /// RC′ against k for panels of signal-dimension and SNR ratios.
    DimSweep,
    /// RC₀ of independent Gaussian projections over (T, k).
    NoiseFloor,
    /// Singular values of C_XX and C_XY for one dataset.
    Spectrum,
    /// Two-view noisy MNIST benchmark.
    Mnist(MnistArgs),
    /// Fit one method on CSV matrices and save the projection.
    Fit(FitArgs),
    /// Apply a saved projection to CSV matrices.
    Transform(TransformArgs),
    /// Print every config key with its default and the preset changes.
    ConfigReference,
}

#[derive(Args)]
struct MnistArgs {
    /// Directory with the IDX files (default: $SDRBENCH_DATA_DIR or ~/.cache/sdrbench/mnist).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Training sizes, e.g. 1000,10000,all.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<SampleSize>>,
    /// Retained dimensions, e.g. 1,2,5,10.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Never download; fail if the IDX files are absent.
    #[arg(long)]
    offline: bool,
    /// Base URL holding the gzip archives.
    #[arg(long, default_value = DEFAULT_MIRROR)]
    mirror: String,
    /// Histogram bins for the column-pair correlations.
    #[arg(long, default_value_t = 50)]
    bins: usize,
}

#[derive(Args)]
struct FitArgs {
    /// CSV matrix with one header row, samples in rows.
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    /// pca, pls, cca or rcca.
    #[arg(long)]
    method: Method,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    c_x: f64,
    #[arg(long, default_value_t = 0.1)]
    c_y: f64,
}

#[derive(Args)]
struct TransformArgs {
    /// projection.json written by `fit`.
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<()> {
    let globals = Globals {
        config: cli.config,
        out: cli.out,
        workers: cli.workers.map(|w| w as usize),
        seed: cli.seed,
        preset: cli.preset,
    };
    let kind = match &cli.command {
        Command::PhaseDiagram => Some(ExperimentKind::PhaseDiagram),
        Command::DimSweep => Some(ExperimentKind::DimSweep),
        Command::NoiseFloor => Some(ExperimentKind::NoiseFloor),
        Command::Spectrum => Some(ExperimentKind::Spectrum),
        Command::Mnist(_) => Some(ExperimentKind::Mnist),
        _ => None,
    };
    let here = || globals.out.clone().unwrap_or_else(|| PathBuf::from("."));

    let written = match (cli.command, kind) {
        (Command::Mnist(a), Some(kind)) => {
            let mut cfg = resolve(kind, &globals)?;
            let opts = MnistOptions { data_dir: a.data_dir, t: a.t, k: a.k, offline: a.offline, mirror: a.mirror, bins: a.bins };
            apply_mnist_options(&mut cfg, &opts)?;
            run_mnist(&cfg, &opts)?
        }
        (_, Some(kind)) => run_experiment(&resolve(kind, &globals)?)?,
        (Command::Fit(a), None) => {
            let out = here();
            std::fs::create_dir_all(&out)?;
            let opts = FitOptions { x: a.x, y: a.y, method: a.method, k: a.k, c_x: a.c_x, c_y: a.c_y };
            vec![run_fit(&opts, &out)?]
        }
        (Command::Transform(a), None) => {
            let out = here();
            std::fs::create_dir_all(&out)?;
            run_transform(&a.bundle, a.x.as_deref(), a.y.as_deref(), &out)?
        }
        (Command::ConfigReference, None) => {
            let page = config_reference();
            match &globals.out {
                Some(dir) => {
                    let path = dir.join("config-reference.md");
                    atomic_write(&path, page.as_bytes())?;
                    vec![path]
                }
                None => {
                    print!("{page}");
                    Vec::new()
                }
            }
        }
        _ => unreachable!("every experiment subcommand has a kind"),
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
