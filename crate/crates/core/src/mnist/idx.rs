//! IDX container files (big-endian headers) as used by MNIST.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;

/// Raw 28 × 28 byte images, row-major, one after another.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub n: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        &self.pixels[i * PIXELS..(i + 1) * PIXELS]
    }
}

fn malformed(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::MalformedHeader { path: path.to_path_buf(), offset, message: message.into() }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| malformed(path, bytes.len() as u64, format!("file ends inside the header (need {} bytes)", offset + 4)))
}

/// Parse an image file already read into memory.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(malformed(path, 0, format!("magic {magic} is not {IMAGE_MAGIC}")));
    }
    let n = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    if rows != SIDE || cols != SIDE {
        return Err(malformed(path, 8, format!("images are {rows}×{cols}, expected {SIDE}×{SIDE}")));
    }
    let need = n * PIXELS;
    let body = &bytes[16..];
    if body.len() != need {
        return Err(malformed(path, 16, format!("header declares {n} images ({need} bytes) but {} bytes follow", body.len())));
    }
    Ok(IdxImages { n, pixels: body.to_vec() })
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(malformed(path, 0, format!("magic {magic} is not {LABEL_MAGIC}")));
    }
    let n = be_u32(bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(malformed(path, 8, format!("header declares {n} labels but {} bytes follow", body.len())));
    }
    if let Some(pos) = body.iter().position(|&l| l > 9) {
        return Err(Error::Inconsistent(format!("{}: label {} at index {pos} is outside 0-9", path.display(), body[pos])));
    }
    Ok(body.to_vec())
}

/// Load an image file and its label file, checking that the counts agree.
pub fn load_idx_images(images: &Path, labels: &Path) -> Result<(IdxImages, Vec<u8>)> {
    let img = parse_idx_images(&std::fs::read(images)?, images)?;
    let lab = parse_idx_labels(&std::fs::read(labels)?, labels)?;
    if img.n != lab.len() {
        return Err(Error::Inconsistent(format!(
            "{} has {} images but {} has {} labels",
            images.display(),
            img.n,
            labels.display(),
            lab.len()
        )));
    }
    Ok((img, lab))
}

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// All 70 000 MNIST digits (the canonical training file, then the test file).
#[derive(Debug, Clone)]
pub struct MnistSource {
    pub images: IdxImages,
    pub labels: Vec<u8>,
}

impl MnistSource {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let p = |name: &str| -> PathBuf { dir.join(name) };
        let (mut a, mut la) = load_idx_images(&p(TRAIN_IMAGES), &p(TRAIN_LABELS))?;
        let (b, lb) = load_idx_images(&p(TEST_IMAGES), &p(TEST_LABELS))?;
        a.pixels.extend_from_slice(&b.pixels);
        a.n += b.n;
        la.extend_from_slice(&lb);
        Ok(MnistSource { images: a, labels: la })
    }
}
