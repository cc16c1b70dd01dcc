use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mnist::idx::{MnistSource, PIXELS};
use crate::mnist::views::{make_view_x, make_view_y};
use crate::rng::{derive_seed, stream_rng};

pub const TRAIN_FRACTION: f64 = 0.8;
pub const TEST_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Two views of `n` digits, stored row-major in single precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewPair {
    pub split: Split,
    pub n: usize,
    pub x_view: Vec<f32>,
    pub y_view: Vec<f32>,
    pub labels: Vec<u8>,
    /// Source index of the X image.
    pub x_source: Vec<u32>,
    /// Source index of the Y image (same label, different digit).
    pub y_source: Vec<u32>,
}

const CACHE_MAGIC: &[u8; 8] = b"SDRVIEW2";

impl ViewPair {
    pub fn x_row(&self, i: usize) -> &[f32] {
        &self.x_view[i * PIXELS..(i + 1) * PIXELS]
    }

    pub fn y_row(&self, i: usize) -> &[f32] {
        &self.y_view[i * PIXELS..(i + 1) * PIXELS]
    }

    /// Selected rows of one view as an `f64` matrix.
    pub fn rows_f64(&self, view: &[f32], rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), PIXELS, |i, j| view[rows[i] * PIXELS + j] as f64)
    }

    pub fn write_cache<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&[match self.split {
            Split::Train => 0,
            Split::Test => 1,
        }])?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&self.labels)?;
        for s in self.x_source.iter().chain(&self.y_source) {
            out.write_all(&s.to_le_bytes())?;
        }
        for v in self.x_view.iter().chain(&self.y_view) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_cache<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Inconsistent("not a view cache file".into()));
        }
        let mut b1 = [0u8; 1];
        input.read_exact(&mut b1)?;
        let split = match b1[0] {
            0 => Split::Train,
            1 => Split::Test,
            other => return Err(Error::Inconsistent(format!("bad split tag {other}"))),
        };
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut labels = vec![0u8; n];
        input.read_exact(&mut labels)?;
        let mut read_u32 = |count: usize| -> Result<Vec<u32>> {
            let mut buf = vec![0u8; count * 4];
            input.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
        };
        let x_source = read_u32(n)?;
        let y_source = read_u32(n)?;
        let mut buf = vec![0u8; 2 * n * PIXELS * 4];
        input.read_exact(&mut buf)?;
        let mut floats = buf.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        let x_view: Vec<f32> = floats.by_ref().take(n * PIXELS).collect();
        let y_view: Vec<f32> = floats.collect();
        Ok(ViewPair { split, n, x_view, y_view, labels, x_source, y_source })
    }
}

/// Pair every digit with another digit of the same label: shuffle each
/// label's indices and shift the shuffled list by one.
pub fn within_label_partners(labels: &[u8], seed: u64) -> Vec<usize> {
    let mut partner: Vec<usize> = (0..labels.len()).collect();
    for label in 0..10u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        idx.shuffle(&mut stream_rng(seed, "pairing", label as u64));
        for j in 0..idx.len() {
            partner[idx[j]] = idx[(j + 1) % idx.len()];
        }
    }
    partner
}

/// Rows of each split, in ascending source order.
pub fn split_rows(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, "split", 0));
    let n_train = (n as f64 * TRAIN_FRACTION).round() as usize;
    let n_test = (n as f64 * TEST_FRACTION).round() as usize;
    let mut train = order[..n_train].to_vec();
    let mut test = order[n - n_test..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Narrow to `f32` without rounding up to 1.
fn unit_f32(v: f64) -> f32 {
    (v as f32).min(1.0 - f32::EPSILON / 2.0)
}

fn assemble(source: &MnistSource, rows: &[usize], partner: &[usize], split: Split, seed: u64) -> ViewPair {
    let views: Vec<(Vec<f64>, Vec<f64>)> = rows
        .par_iter()
        .map(|&i| {
            let s = derive_seed(seed, "view", &[i as u64]);
            (make_view_x(source.images.image(i), s), make_view_y(source.images.image(partner[i]), s))
        })
        .collect();
    let mut x_view = Vec::with_capacity(rows.len() * PIXELS);
    let mut y_view = Vec::with_capacity(rows.len() * PIXELS);
    for (x, y) in views {
        x_view.extend(x.iter().map(|&v| unit_f32(v)));
        y_view.extend(y.iter().map(|&v| unit_f32(v)));
    }
    ViewPair {
        split,
        n: rows.len(),
        x_view,
        y_view,
        labels: rows.iter().map(|&i| source.labels[i]).collect(),
        x_source: rows.iter().map(|&i| i as u32).collect(),
        y_source: rows.iter().map(|&i| partner[i] as u32).collect(),
    }
}

/// Build the train and test splits (80 % / 10 % of all digits).
pub fn build_dataset(source: &MnistSource, seed: u64) -> (ViewPair, ViewPair) {
    let partner = within_label_partners(&source.labels, seed);
    let (train, test) = split_rows(source.len(), seed);
    (
        assemble(source, &train, &partner, Split::Train, seed),
        assemble(source, &test, &partner, Split::Test, seed),
    )
}

/// [`build_dataset`] through a per-seed binary cache in `cache_dir`.
pub fn build_dataset_cached(source_dir: &Path, cache_dir: &Path, seed: u64) -> Result<(ViewPair, ViewPair)> {
    let path = |s: &str| cache_dir.join(format!("mnist-views-seed{seed}-{s}.bin"));
    let (tp, sp) = (path("train"), path("test"));
    if tp.exists() && sp.exists() {
        let open = |p: &Path| -> Result<ViewPair> { ViewPair::read_cache(std::io::BufReader::new(std::fs::File::open(p)?)) };
        match (open(&tp), open(&sp)) {
            (Ok(a), Ok(b)) => return Ok((a, b)),
            _ => log::warn!("ignoring unreadable view cache in {}", cache_dir.display()),
        }
    }
    let source = MnistSource::load(source_dir)?;
    let (train, test) = build_dataset(&source, seed);
    for (p, v) in [(&tp, &train), (&sp, &test)] {
        let mut buf = Vec::new();
        v.write_cache(&mut buf)?;
        crate::experiments::atomic_write(p, &buf)?;
    }
    Ok((train, test))
}

/// Histograms of column-pair Pearson correlations over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistograms {
    pub edges: Vec<f64>,
    /// Off-diagonal pairs within X.
    pub x_self: Vec<u64>,
    /// Off-diagonal pairs within Y.
    pub y_self: Vec<u64>,
    /// Every X column against every Y column.
    pub cross: Vec<u64>,
    /// Columns left out for having no spread.
    pub constant_x: usize,
    pub constant_y: usize,
}

pub fn correlation_histograms(views: &ViewPair, bins: usize) -> Result<CorrelationHistograms> {
    if bins == 0 || views.n < 2 {
        return Err(Error::invalid("need at least one bin and two rows"));
    }
    let rows: Vec<usize> = (0..views.n).collect();
    let mut acc = crate::dr::CovarianceAccumulator::new(PIXELS, PIXELS);
    let (mut sx, mut sy) = (vec![0.0; PIXELS], vec![0.0; PIXELS]);
    for chunk in rows.chunks(4096) {
        let x = views.rows_f64(&views.x_view, chunk);
        let y = views.rows_f64(&views.y_view, chunk);
        for j in 0..PIXELS {
            sx[j] += x.column(j).sum();
            sy[j] += y.column(j).sum();
        }
        acc.add_rows(&x, &y)?;
    }
    let b = acc.finish()?;
    let n = views.n as f64;
    let (mx, my): (Vec<f64>, Vec<f64>) = (sx.iter().map(|s| s / n).collect(), sy.iter().map(|s| s / n).collect());
    let sd = |c: &DMatrix<f64>, m: &[f64], j: usize| (c[(j, j)] - m[j] * m[j]).max(0.0).sqrt();
    let sdx: Vec<f64> = (0..PIXELS).map(|j| sd(&b.c_xx, &mx, j)).collect();
    let sdy: Vec<f64> = (0..PIXELS).map(|j| sd(&b.c_yy, &my, j)).collect();
    let live = |s: &[f64]| -> Vec<usize> { (0..PIXELS).filter(|&j| s[j] > 1e-9).collect() };
    let (lx, ly) = (live(&sdx), live(&sdy));

    let edges: Vec<f64> = (0..=bins).map(|i| -1.0 + 2.0 * i as f64 / bins as f64).collect();
    let bin = |r: f64| (((r.clamp(-1.0, 1.0) + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
    let corr = |c: &DMatrix<f64>, ma: &[f64], mb: &[f64], sa: &[f64], sb: &[f64], i: usize, j: usize| {
        (c[(i, j)] - ma[i] * mb[j]) / (sa[i] * sb[j])
    };
    let mut x_self = vec![0u64; bins];
    let mut y_self = vec![0u64; bins];
    let mut cross = vec![0u64; bins];
    for (a, &i) in lx.iter().enumerate() {
        for &j in &lx[a + 1..] {
            x_self[bin(corr(&b.c_xx, &mx, &mx, &sdx, &sdx, i, j))] += 1;
        }
        for &j in &ly {
            cross[bin(corr(&b.c_xy, &mx, &my, &sdx, &sdy, i, j))] += 1;
        }
    }
    for (a, &i) in ly.iter().enumerate() {
        for &j in &ly[a + 1..] {
            y_self[bin(corr(&b.c_yy, &my, &my, &sdy, &sdy, i, j))] += 1;
        }
    }
    Ok(CorrelationHistograms {
        edges,
        x_self,
        y_self,
        cross,
        constant_x: PIXELS - lx.len(),
        constant_y: PIXELS - ly.len(),
    })
}
