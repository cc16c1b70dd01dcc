mod common;

use common::*;
use nalgebra::DMatrix;
use sdrbench_core::dr::{fit, FitConfig, Method};
use sdrbench_core::metrics::{estimate_rc0, rc, total_correlation, Rc0Cache, RcReport};

#[test]
fn uncorrelated_identical_columns_give_root_k() {
    let z = gaussian(&mut rng(1), 100_000, 4);
    let v = total_correlation(&z, &z).unwrap();
    assert!((v - 2.0).abs() <= 0.02, "{v}");
}

#[test]
fn independent_scalars_are_near_zero() {
    let mut r = rng(2);
    let zx = gaussian(&mut r, 100_000, 1);
    let zy = gaussian(&mut r, 100_000, 1);
    assert!(total_correlation(&zx, &zy).unwrap() <= 0.02);
    assert!(rc(&zx, &zy, 1).unwrap() <= 0.02);
}

#[test]
fn two_shared_identities_normalize_to_half_root_two() {
    let z = gaussian(&mut rng(3), 100_000, 2);
    let v = rc(&z, &z, 2).unwrap();
    assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() <= 0.02, "{v}");
}

#[test]
fn noise_floor_examples() {
    assert!(estimate_rc0(100_000, 1, 1, 1, 20, 4).unwrap().0 <= 0.02);
    let (mean, std) = estimate_rc0(100, 30, 30, 1, 20, 5).unwrap();
    assert!(mean > 1.0, "{mean}");
    assert!(std / mean < 0.2, "{std} / {mean}");
    assert_eq!(estimate_rc0(100, 30, 30, 1, 20, 5).unwrap(), (mean, std));
}

#[test]
fn noise_floor_grows_with_k() {
    let floors: Vec<(f64, f64)> = [1, 5, 10, 30].iter().map(|&k| estimate_rc0(100, k, k, 1, 20, 6).unwrap()).collect();
    for w in floors.windows(2) {
        assert!(w[1].0 >= w[0].0 - w[1].1.max(w[0].1), "{floors:?}");
    }
}

#[test]
fn pure_noise_pipeline_is_calibrated() {
    let cache = Rc0Cache::new(7);
    for (i, m) in Method::ALL.iter().enumerate() {
        let mut r = rng(70 + i as u64);
        let (x, y) = (gaussian(&mut r, 400, 20), gaussian(&mut r, 400, 20));
        let (xt, yt) = (gaussian(&mut r, 400, 20), gaussian(&mut r, 400, 20));
        let pair = fit(&x, &y, &FitConfig::new(*m, 3)).unwrap();
        let zx = pair.transform_x(&xt).unwrap();
        let zy = pair.transform_y(&yt).unwrap();
        let rep = RcReport::evaluate(&zx, &zy, 1, &cache, 20).unwrap();
        assert!(rep.rc_prime.abs() <= 3.0 * rep.rc0_std, "{m}: {rep:?}");
    }
    assert_eq!(cache.len(), 1);
}

#[test]
fn constant_column_is_rejected() {
    let zx = DMatrix::from_element(10, 1, 3.0);
    let zy = gaussian(&mut rng(8), 10, 1);
    assert!(total_correlation(&zx, &zy).is_err());
}
