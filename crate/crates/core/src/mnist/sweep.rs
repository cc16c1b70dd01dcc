use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dr::{CovarianceAccumulator, FitConfig, Method};
use crate::error::{Error, Result};
use crate::experiments::{evaluate_groups, fit_groups_blocks, group_methods, Axis, ExperimentKind, GridResult, Rc0Cell, TrialCoords};
use crate::metrics::{Rc0Cache, Rc0Key, DEFAULT_RC0_TRIALS};
use crate::mnist::dataset::ViewPair;
use crate::mnist::idx::PIXELS;
use crate::rng::stream_rng;

/// Training-set size: a count, or every training row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    Count(usize),
    All,
}

impl SampleSize {
    pub fn resolve(self, available: usize) -> usize {
        match self {
            SampleSize::Count(n) => n.min(available),
            SampleSize::All => available,
        }
    }
}

impl std::str::FromStr for SampleSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(SampleSize::All);
        }
        s.parse::<usize>()
            .map(SampleSize::Count)
            .map_err(|_| Error::invalid(format!("sample size {s:?} is neither a count nor \"all\"")))
    }
}

impl Serialize for SampleSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleSize::Count(n) => s.serialize_u64(*n as u64),
            SampleSize::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for SampleSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = SampleSize;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a sample count or \"all\"")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<SampleSize, E> {
                Ok(SampleSize::Count(v as usize))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<SampleSize, E> {
                usize::try_from(v).map(SampleSize::Count).map_err(|_| E::custom("sample count must be non-negative"))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<SampleSize, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnistSpec {
    /// Directory holding the four IDX files.
    pub data_dir: Option<PathBuf>,
    /// Where built views are cached; defaults to the data directory.
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub t_list: Vec<SampleSize>,
    pub k_grid: Vec<usize>,
    pub methods: Vec<FitConfig>,
    pub rc0_trials: usize,
}

impl Default for MnistSpec {
    fn default() -> Self {
        MnistSpec {
            data_dir: None,
            cache_dir: None,
            seed: 0,
            t_list: vec![SampleSize::Count(1000), SampleSize::Count(10_000), SampleSize::All],
            k_grid: vec![1, 2, 5, 10, 20, 50, 100],
            methods: Method::ALL.iter().map(|&m| FitConfig::new(m, 1)).collect(),
            rc0_trials: DEFAULT_RC0_TRIALS,
        }
    }
}

impl MnistSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_list.is_empty() || self.k_grid.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid("t_list, k_grid and methods must not be empty"));
        }
        if self.k_grid.iter().any(|&k| k == 0 || k > PIXELS) {
            return Err(Error::invalid(format!("every k must lie in [1, {PIXELS}]")));
        }
        if self.t_list.iter().any(|t| matches!(t, SampleSize::Count(n) if *n < 2)) {
            return Err(Error::invalid("every T must be at least 2"));
        }
        if self.rc0_trials == 0 {
            return Err(Error::invalid("rc0_trials must be at least 1"));
        }
        for cfg in &self.methods {
            FitConfig { k: 1, ..cfg.clone() }.validate(PIXELS, PIXELS)?;
        }
        Ok(())
    }
}

/// Column means and standard deviations over the given rows.
fn column_stats(view: &[f32], rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut sum = vec![0.0f64; PIXELS];
    let mut sq = vec![0.0f64; PIXELS];
    for &r in rows {
        for (j, &v) in view[r * PIXELS..(r + 1) * PIXELS].iter().enumerate() {
            let v = v as f64;
            sum[j] += v;
            sq[j] += v * v;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let sd = (0..PIXELS).map(|j| (sq[j] / n - mean[j] * mean[j]).max(0.0).sqrt()).collect();
    (mean, sd)
}

/// Standardizer fitted on training rows; columns without spread are dropped.
struct Standardizer {
    keep: Vec<usize>,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

const MIN_PIXEL_STD: f64 = 1e-6;

impl Standardizer {
    fn fit(view: &[f32], rows: &[usize]) -> Self {
        let (mean, sd) = column_stats(view, rows);
        let keep = (0..PIXELS).filter(|&j| sd[j] > MIN_PIXEL_STD).collect();
        Standardizer { keep, mean, sd }
    }

    fn apply(&self, view: &[f32], rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.keep.len(), |i, c| {
            let j = self.keep[c];
            (view[rows[i] * PIXELS + j] as f64 - self.mean[j]) / self.sd[j]
        })
    }
}

/// Nested training subsets: the first `T` rows of one seeded permutation.
pub fn training_subset(n: usize, t: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, "subset", 0));
    let mut rows = order[..t.min(n)].to_vec();
    rows.sort_unstable();
    rows
}

const CHUNK: usize = 4096;

/// Fit every method on `T` training rows and score the full test split
/// against the noise floor at the test size, for every `k`.
pub fn run_mnist_sweep(
    train: &ViewPair,
    test: &ViewPair,
    methods: &[FitConfig],
    k_grid: &[usize],
    t_list: &[SampleSize],
    seed: u64,
    rc0_trials: usize,
) -> Result<GridResult> {
    let groups = group_methods(methods, Some(k_grid));
    let cache = Rc0Cache::new(seed);
    let test_rows: Vec<usize> = (0..test.n).collect();
    let mut records = Vec::new();
    let mut kept = Vec::new();
    let mut ts = Vec::new();

    for &size in t_list {
        let t = size.resolve(train.n);
        ts.push(t);
        let rows = training_subset(train.n, t, seed);
        let sx = Standardizer::fit(&train.x_view, &rows);
        let sy = Standardizer::fit(&train.y_view, &rows);
        let (nx, ny) = (sx.keep.len(), sy.keep.len());
        if let Some(&k) = k_grid.iter().find(|&&k| k > nx.min(ny)) {
            return Err(Error::invalid(format!("k = {k} exceeds the {} informative pixels at T = {t}", nx.min(ny))));
        }
        kept.push(serde_json::json!({ "t": t, "n_x": nx, "n_y": ny }));
        log::info!("T = {t}: {nx} / {ny} informative pixels");

        let mut acc = CovarianceAccumulator::new(nx, ny);
        for chunk in rows.chunks(CHUNK) {
            acc.add_rows(&sx.apply(&train.x_view, chunk), &sy.apply(&train.y_view, chunk))?;
        }
        let blocks = acc.finish()?;
        let fits = fit_groups_blocks(&blocks, &groups)?;
        let x_test = sx.apply(&test.x_view, &test_rows);
        let y_test = sy.apply(&test.y_view, &test_rows);
        records.extend(evaluate_groups(
            &fits,
            &groups,
            &x_test,
            &y_test,
            TrialCoords {
                t,
                n_x: nx,
                n_y: ny,
                m_self: 0,
                m_shared: 1,
                gamma_self: f64::NAN,
                gamma_shared: f64::NAN,
                trial: 0,
                proj_trial: 0,
            },
            &cache,
            rc0_trials,
        )?);
    }

    let mut rc0 = Vec::new();
    for &k in k_grid {
        let key = Rc0Key { t: test.n, k_x: k, k_y: k, m_shared: 1, n_trials: rc0_trials };
        let (mean, std) = cache.get(key)?;
        rc0.push(Rc0Cell { t: key.t, k_x: k, k_y: k, m_shared: 1, n_trials: rc0_trials, mean, std });
    }
    let axes = vec![Axis::new("t", ts.iter().map(|&t| t as f64)), Axis::new("k", k_grid.iter().map(|&k| k as f64))];
    let metadata = serde_json::json!({
        "seed": seed,
        "methods": methods,
        "k_grid": k_grid,
        "t_list": t_list,
        "test_size": test.n,
        "informative_pixels": kept,
        "rc0_trials": rc0_trials,
    });
    Ok(GridResult::from_parts(ExperimentKind::Mnist, axes, records, rc0, metadata))
}
