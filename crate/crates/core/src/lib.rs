//! Shared-signal recovery benchmark: a planted two-view linear model, four
//! linear dimensionality-reduction methods, and a bias-corrected
//! reconstructed-correlation metric.

pub mod dr;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod mnist;
pub mod model;
pub mod rng;

pub use dr::{FitConfig, Method, ProjectionPair};
pub use error::{Error, Result};
pub use metrics::RcReport;
pub use model::{ModelParams, PairedDataset, QuenchedProjections};
