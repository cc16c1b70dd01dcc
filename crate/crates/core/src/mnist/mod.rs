//! Two-view noisy MNIST: X is a randomly rotated and rescaled digit, Y is a
//! different digit of the same label over Perlin noise. The label is the
//! only shared signal.

mod dataset;
mod idx;
mod sweep;
mod views;

pub use dataset::{
    build_dataset, build_dataset_cached, correlation_histograms, split_rows, within_label_partners,
    CorrelationHistograms, Split, ViewPair, TEST_FRACTION, TRAIN_FRACTION,
};
pub use idx::{
    load_idx_images, parse_idx_images, parse_idx_labels, IdxImages, MnistSource, IMAGE_MAGIC, LABEL_MAGIC, PIXELS,
    SIDE, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
};
pub use sweep::{run_mnist_sweep, training_subset, MnistSpec, SampleSize};
pub use views::{
    bilinear, clamp_unit, make_view_x, make_view_x_with, make_view_y, make_view_y_with, normalize_image,
    rotate_scale, view_x_params, view_y_params, PerlinField, ONE_BELOW, PERLIN_CELLS,
};

/// Environment variable naming the MNIST data directory.
pub const DATA_DIR_ENV: &str = "SDRBENCH_DATA_DIR";

/// `$SDRBENCH_DATA_DIR`, else `~/.cache/sdrbench/mnist`.
pub fn default_data_dir() -> std::path::PathBuf {
    if let Some(d) = std::env::var_os(DATA_DIR_ENV) {
        return d.into();
    }
    let home = std::env::var_os("HOME").map(std::path::PathBuf::from).unwrap_or_else(|| ".".into());
    home.join(".cache").join("sdrbench").join("mnist")
}
