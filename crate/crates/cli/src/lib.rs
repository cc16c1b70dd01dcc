//! Command-line runner for the benchmark: config files, experiment
//! dispatch, result files and SVG figures.

pub mod commands;
pub mod config;
pub mod download;
pub mod plot;

pub use config::{load_config, ConfigError, ExperimentSpec, PresetName, RunConfig};
pub use plot::{render_curves, render_heatmap, PlotKind, PlotSpec};

/// Exit status for a failed run: 2 for a rejected config, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.downcast_ref::<ConfigError>().is_some()) {
        2
    } else {
        1
    }
}
