use sdrbench_core::dr::{fit_cca, FitConfig, Method};
use sdrbench_core::model::{generate_dataset, params_from_snr, sample_quenched, ModelParams};

#[test]
fn quenched_entries_have_target_variance() {
    let params = ModelParams { n_x: 1000, n_y: 1000, m_shared: 1, ..Default::default() };
    for seed in 0..5 {
        let q = sample_quenched(&params, seed).unwrap().q_x;
        let mean = q.mean();
        let var = q.map(|v| (v - mean) * (v - mean)).sum() / q.len() as f64;
        assert!((0.85..=1.15).contains(&var), "seed {seed}: {var}");
    }
}

#[test]
fn empty_shared_block_has_zero_rows() {
    let params = ModelParams { m_shared: 0, ..Default::default() };
    let p = sample_quenched(&params, 1).unwrap();
    assert_eq!((p.q_x.nrows(), p.q_x.ncols(), p.q_y.nrows()), (0, params.n_x, 0));
}

#[test]
fn raw_variance_matches_decomposition() {
    let params = ModelParams { n_x: 100, n_y: 100, t: 3000, ..Default::default() };
    let expected = params.total_variance().0;
    assert_eq!(expected, 3.0);
    let mut means = Vec::new();
    for seed in 0..4 {
        let proj = sample_quenched(&params, seed).unwrap();
        let d = generate_dataset(&params, &proj, seed + 100).unwrap();
        means.push(d.raw_var_x.iter().sum::<f64>() / d.raw_var_x.len() as f64);
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    assert!((mean - expected).abs() / expected < 0.1, "{mean}");
}

#[test]
fn shared_channel_reaches_both_views() {
    let base = ModelParams { n_x: 50, n_y: 50, t: 10_000, m_self_x: 0, m_self_y: 0, m_shared: 1, ..Default::default() };
    let params = params_from_snr(&base, 0.0, 1.0).unwrap();
    let proj = sample_quenched(&params, 5).unwrap();
    let d = generate_dataset(&params, &proj, 6).unwrap();
    let top = fit_cca(&d.x, &d.y, &FitConfig::new(Method::Cca, 1)).unwrap().scores[0];
    assert!(top > 0.5, "{top}");

    let silent = params_from_snr(&base, 0.0, 0.0).unwrap();
    let d = generate_dataset(&silent, &sample_quenched(&silent, 5).unwrap(), 6).unwrap();
    let top0 = fit_cca(&d.x, &d.y, &FitConfig::new(Method::Cca, 1)).unwrap().scores[0];
    assert!(top0 < 0.2, "{top0}");
}
