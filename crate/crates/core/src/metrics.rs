//! Reconstructed correlation (RC), its pure-noise floor RC₀, and the
//! corrected score RC′ = RC − RC₀.

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cross_product;
use crate::model::gaussian_matrix;
use crate::rng::{derive_seed, stream_rng};

/// Default number of surrogate trials behind each RC₀ estimate.
pub const DEFAULT_RC0_TRIALS: usize = 20;

/// Center and scale each column to unit Euclidean norm.
fn normalized_columns(z: &DMatrix<f64>, which: &'static str) -> Result<DMatrix<f64>> {
    let t = z.nrows() as f64;
    let mut out = z.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.sum() / t;
        let scale = col.amax();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if !(norm > 1e-12 * scale * t.sqrt()) {
            return Err(Error::DegenerateColumn { which, column: j });
        }
        col /= norm;
    }
    Ok(out)
}

/// Pearson correlation matrix (`k_x × k_y`) between the columns of two
/// score matrices.
pub fn correlation_matrix(z_x: &DMatrix<f64>, z_y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if z_x.nrows() != z_y.nrows() {
        return Err(Error::DimensionMismatch { context: "correlation rows", expected: z_x.nrows(), found: z_y.nrows() });
    }
    if z_x.nrows() < 2 {
        return Err(Error::invalid("correlation needs at least two rows"));
    }
    let a = normalized_columns(z_x, "z_x")?;
    let b = normalized_columns(z_y, "z_y")?;
    Ok(cross_product(&a, &b))
}

/// Frobenius norm of the Pearson correlation matrix between `z_x` and `z_y`.
pub fn total_correlation(z_x: &DMatrix<f64>, z_y: &DMatrix<f64>) -> Result<f64> {
    Ok(correlation_matrix(z_x, z_y)?.norm())
}

/// Total correlation normalized by the planted shared dimension.
pub fn rc(z_x: &DMatrix<f64>, z_y: &DMatrix<f64>, m_shared: usize) -> Result<f64> {
    if m_shared == 0 {
        return Err(Error::invalid("m_shared must be at least 1"));
    }
    Ok(total_correlation(z_x, z_y)? / m_shared as f64)
}

pub fn rc_prime(rc_value: f64, rc0_value: f64) -> f64 {
    rc_value - rc0_value
}

/// Mean and sample standard deviation of RC over `n_trials` pairs of
/// independent standard-Gaussian `t × k` matrices.
pub fn estimate_rc0(t: usize, k_x: usize, k_y: usize, m_shared: usize, n_trials: usize, seed: u64) -> Result<(f64, f64)> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    if t < 2 {
        return Err(Error::invalid("t must be at least 2"));
    }
    if k_x == 0 || k_y == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut values = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let mut rng = stream_rng(seed, "rc0", trial as u64);
        let zx = gaussian_matrix(&mut rng, t, k_x, 1.0);
        let zy = gaussian_matrix(&mut rng, t, k_y, 1.0);
        values.push(rc(&zx, &zy, m_shared)?);
    }
    Ok(mean_std(&values))
}

/// Mean and sample (n − 1) standard deviation; the std of one value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rc0Key {
    pub t: usize,
    pub k_x: usize,
    pub k_y: usize,
    pub m_shared: usize,
    pub n_trials: usize,
}

impl Rc0Key {
    /// Surrogate seed, a pure function of the master seed and the key.
    pub fn seed(&self, master: u64) -> u64 {
        derive_seed(
            master,
            "rc0-cell",
            &[self.t as u64, self.k_x as u64, self.k_y as u64, self.m_shared as u64, self.n_trials as u64],
        )
    }
}

/// Thread-safe memo of RC₀ estimates. Concurrent misses on the same key
/// compute identical values, so whichever insert lands last is harmless.
#[derive(Debug, Default)]
pub struct Rc0Cache {
    master_seed: u64,
    map: RwLock<HashMap<Rc0Key, (f64, f64)>>,
}

impl Rc0Cache {
    pub fn new(master_seed: u64) -> Self {
        Rc0Cache { master_seed, map: RwLock::new(HashMap::new()) }
    }

    pub fn get(&self, key: Rc0Key) -> Result<(f64, f64)> {
        if let Some(v) = self.map.read().expect("rc0 cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = estimate_rc0(key.t, key.k_x, key.k_y, key.m_shared, key.n_trials, key.seed(self.master_seed))?;
        self.map.write().expect("rc0 cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("rc0 cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcReport {
    pub rc: f64,
    pub rc0: f64,
    pub rc_prime: f64,
    pub k_x: usize,
    pub k_y: usize,
    pub t: usize,
    pub m_shared: usize,
    pub n_noise_trials: usize,
    pub rc0_std: f64,
}

impl RcReport {
    /// Score test-set projections against the noise floor at the same
    /// `(T, k_x, k_y)`.
    pub fn evaluate(z_x: &DMatrix<f64>, z_y: &DMatrix<f64>, m_shared: usize, cache: &Rc0Cache, n_trials: usize) -> Result<Self> {
        let rc_value = rc(z_x, z_y, m_shared)?;
        let key = Rc0Key { t: z_x.nrows(), k_x: z_x.ncols(), k_y: z_y.ncols(), m_shared, n_trials };
        let (rc0, rc0_std) = cache.get(key)?;
        Ok(RcReport {
            rc: rc_value,
            rc0,
            rc_prime: rc_prime(rc_value, rc0),
            k_x: key.k_x,
            k_y: key.k_y,
            t: key.t,
            m_shared,
            n_noise_trials: n_trials,
            rc0_std,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_correlation_is_one() {
        let z = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 0.5, 3.0]);
        assert!((total_correlation(&z, &z).unwrap() - 1.0).abs() < 1e-14);
        assert!((rc(&z, &z, 1).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let z = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 5.0, 5.0, 5.0]);
        let err = total_correlation(&z, &z).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn { which: "z_x", column: 1 }));
    }

    #[test]
    fn rc_prime_is_plain_subtraction() {
        assert!((rc_prime(1.2, 0.3) - 0.9).abs() < 1e-15);
        assert_eq!(rc_prime(0.4, 0.4), 0.0);
        assert_eq!(rc_prime(0.95, 0.0), 0.95);
    }

    #[test]
    fn rc0_is_deterministic() {
        let a = estimate_rc0(50, 3, 4, 1, 5, 11).unwrap();
        let b = estimate_rc0(50, 3, 4, 1, 5, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, estimate_rc0(50, 3, 4, 1, 5, 12).unwrap());
    }

    #[test]
    fn cache_matches_direct_estimate() {
        let cache = Rc0Cache::new(3);
        let key = Rc0Key { t: 40, k_x: 2, k_y: 2, m_shared: 1, n_trials: 4 };
        let direct = estimate_rc0(40, 2, 2, 1, 4, key.seed(3)).unwrap();
        assert_eq!(cache.get(key).unwrap(), direct);
        assert_eq!(cache.get(key).unwrap(), direct);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
