//! Fetch the four MNIST archives into a data directory.

use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use flate2::read::GzDecoder;

use sdrbench_core::experiments::atomic_write;
use sdrbench_core::mnist::{TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};

pub const DEFAULT_MIRROR: &str = "https://storage.googleapis.com/cvdf-datasets/mnist/";

/// File name and published size of each gzip archive.
pub const ARCHIVES: [(&str, u64); 4] =
    [(TRAIN_IMAGES, 9_912_422), (TRAIN_LABELS, 28_881), (TEST_IMAGES, 1_648_877), (TEST_LABELS, 4_542)];

/// IDX files not yet present in `dir`.
pub fn missing_files(dir: &Path) -> Vec<&'static str> {
    ARCHIVES.iter().map(|(name, _)| *name).filter(|name| !dir.join(name).is_file()).collect()
}

/// Make sure every IDX file is in `dir`, downloading from `mirror` unless
/// `offline` is set.
pub fn ensure_mnist(dir: &Path, mirror: &str, offline: bool) -> Result<()> {
    let missing = missing_files(dir);
    if missing.is_empty() {
        return Ok(());
    }
    if offline {
        bail!("{} lacks {} (offline mode, nothing downloaded)", dir.display(), missing.join(", "));
    }
    for name in missing {
        let expected = ARCHIVES.iter().find(|(n, _)| *n == name).map(|(_, len)| *len).unwrap_or(0);
        let url = format!("{}/{name}.gz", mirror.trim_end_matches('/'));
        log::info!("downloading {url}");
        let gz = fetch(&url, expected).with_context(|| format!("downloading {url}"))?;
        let mut raw = Vec::new();
        GzDecoder::new(&gz[..]).read_to_end(&mut raw).with_context(|| format!("decompressing {name}.gz"))?;
        atomic_write(&dir.join(name), &raw)?;
    }
    Ok(())
}

fn fetch(url: &str, expected: u64) -> Result<Vec<u8>> {
    let mut resp = ureq::get(url).call()?;
    if let Some(len) = resp.headers().get("content-length").and_then(|v| v.to_str().ok()?.parse::<u64>().ok()) {
        if len != expected {
            bail!("server reports {len} bytes, expected {expected}");
        }
    }
    let body = resp.body_mut().with_config().limit(expected + 1).read_to_vec()?;
    if body.len() as u64 != expected {
        bail!("received {} bytes, expected {expected}", body.len());
    }
    Ok(body)
}
