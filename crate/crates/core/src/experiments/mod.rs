//! Monte Carlo sweeps: phase diagrams over the SNR plane, dimension sweeps,
//! noise-floor maps and singular spectra.
//!
//! Every random draw is seeded by a pure function of the master seed and the
//! cell and trial coordinates, and records are sorted by key before
//! aggregation, so results do not depend on the worker count.

mod grid;
mod run;
mod spec;
mod spectrum;

pub use grid::{
    atomic_write, read_records_csv, write_records_csv, Axis, CellKey, CellSummary, GridResult, Rc0Cell, Status,
    TrialRecord, RESULTS_HEADER,
};
pub use run::{run_dimension_sweep, run_noise_floor_map, run_phase_diagram, with_workers};
pub(crate) use run::{evaluate_groups, fit_groups_blocks, group_methods, TrialCoords};
pub use spec::{
    default_gamma_grid, default_panels, linspace, DimPanel, ExperimentKind, NoiseFloorSpec, Preset, SpectrumSpec,
    SweepSpec,
};
pub use spectrum::{run_spectrum, run_spectrum_analysis, run_spectrum_analysis_with, SpectrumResult};
