//! Synthetic paired datasets from the planted linear model.

mod generate;
mod params;

pub use generate::{
    generate_dataset, generate_dataset_with, read_matrix_csv, sample_quenched, standardize_columns,
    write_matrix_csv, PairedDataset, QuenchedProjections, Standardize, StandardizationWarning,
    DEGENERATE_STD,
};
pub(crate) use generate::gaussian_matrix;
pub use params::{params_from_snr, snr, ModelParams, Snr};
