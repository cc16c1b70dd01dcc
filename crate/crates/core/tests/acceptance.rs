//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always shown.
//! Exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use sdrbench_core::dr::{
    covariance_blocks, fit_cca, fit_pca_cov, fit_pca_deflated, fit_pls, fit_rcca, FitConfig, Method,
};
use sdrbench_core::experiments::{
    run_dimension_sweep, run_phase_diagram, run_spectrum_analysis, with_workers, DimPanel, ExperimentKind,
    GridResult, Preset, SweepSpec,
};
use sdrbench_core::linalg::principal_cosines;
use sdrbench_core::metrics::estimate_rc0;
use sdrbench_core::mnist::{build_dataset_cached, default_data_dir, run_mnist_sweep, MnistSpec};
use sdrbench_core::model::{params_from_snr, sample_quenched, ModelParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, id: &str, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let mut o = f();
        let elapsed = start.elapsed();
        if elapsed > budget {
            o.pass = false;
            o.detail.push_str(&format!("; runtime {:.1}s over budget {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()));
        }
        if !o.pass {
            self.failures += 1;
        }
        println!(
            "{} criterion {id} ({title}) [{:.1}s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            o.detail
        );
    }
}

const CORNER_LOW: f64 = 0.05;
const CORNER_HIGH: f64 = 1.0;

fn phase_spec() -> SweepSpec {
    let mut s = SweepSpec::preset(Preset::Ci, ExperimentKind::PhaseDiagram);
    s.t_list = vec![600];
    s.methods = vec![
        FitConfig::new(Method::Pca, 1),
        FitConfig::new(Method::Pca, 2),
        FitConfig::new(Method::Pls, 1),
        FitConfig::new(Method::Cca, 1),
        FitConfig::new(Method::Rcca, 1),
    ];
    s.master_seed = 20240601;
    s
}

fn mean_at(g: &GridResult, m: Method, t: usize, k: usize, gs: f64, gh: f64) -> f64 {
    g.cell(m, t, k, gs, gh).and_then(|c| c.mean).unwrap_or(f64::NAN)
}

fn dominance(g: &GridResult, k_pca: usize, k_rcca: usize) -> (bool, String) {
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut at = String::new();
    for r in g.cells_for(Method::Rcca) {
        let kp = if k_pca == 0 { r.k } else { k_pca };
        if k_rcca != 0 && r.k != k_rcca {
            continue;
        }
        let Some(p) = g.cells.iter().find(|c| {
            c.method == Method::Pca
                && c.k == kp
                && c.t == r.t
                && c.m_self == r.m_self
                && c.gamma_self.to_bits() == r.gamma_self.to_bits()
                && c.gamma_shared.to_bits() == r.gamma_shared.to_bits()
        }) else {
            continue;
        };
        let (Some(a), Some(b)) = (r.mean, p.mean) else { continue };
        let margin = a - (b - 2.0 * r.pooled_std(p));
        checked += 1;
        if margin < worst {
            worst = margin;
            at = format!(
                "k={} γ_self={:.3} γ_shared={:.3} (rCCA {a:.3}, PCA {b:.3}, pooled std {:.3})",
                r.k,
                r.gamma_self,
                r.gamma_shared,
                r.pooled_std(p)
            );
        }
    }
    (worst >= 0.0 && checked > 0, format!("{checked} cells, smallest margin {worst:.3} at {at}"))
}

fn main() {
    let mut suite = Suite { failures: 0 };
    let minute = Duration::from_secs(60);

    let phase_start = Instant::now();
    let phase = run_phase_diagram(&phase_spec()).expect("phase diagram");
    let phase_time = phase_start.elapsed();

    suite.run("1", "phase-diagram corner contrast", 5 * minute, || {
        let pca_self = mean_at(&phase, Method::Pca, 600, 1, CORNER_HIGH, CORNER_LOW);
        let pca_shared = mean_at(&phase, Method::Pca, 600, 1, CORNER_LOW, CORNER_HIGH);
        let r_self = mean_at(&phase, Method::Rcca, 600, 1, CORNER_HIGH, CORNER_LOW);
        let r_shared = mean_at(&phase, Method::Rcca, 600, 1, CORNER_LOW, CORNER_HIGH);
        let pass = pca_self <= 0.3 && pca_shared >= 0.8 && r_self >= 0.8 && r_shared >= 0.8;
        outcome(
            pass && phase_time < 5 * minute,
            format!(
                "PCA {pca_self:.3} (≤0.3) / {pca_shared:.3} (≥0.8); rCCA {r_self:.3} / {r_shared:.3} (≥0.8); grid run {:.1}s",
                phase_time.as_secs_f64()
            ),
        )
    });

    suite.run("2", "PCA recovery with k=2", minute, || {
        let k1 = mean_at(&phase, Method::Pca, 600, 1, CORNER_HIGH, CORNER_LOW);
        let k2 = mean_at(&phase, Method::Pca, 600, 2, CORNER_HIGH, CORNER_LOW);
        outcome(k2 > k1 + 0.2, format!("PCA k=2 {k2:.3} vs k=1 {k1:.3} (need > k1 + 0.2)"))
    });

    suite.run("3", "CCA undersampling failure", 5 * minute, || {
        let mut spec = phase_spec();
        spec.t_list = vec![60];
        spec.methods = vec![FitConfig::new(Method::Cca, 1)];
        let small = run_phase_diagram(&spec).expect("T=60 run");
        let total = small.records.len();
        let singular = small.records.iter().filter(|r| r.rc.is_none()).count();
        let mut direct_fail = 0;
        for seed in 0..9u64 {
            let mut r = rng(1000 + seed);
            let x = gaussian(&mut r, 60, 200);
            let y = gaussian(&mut r, 60, 200);
            if matches!(fit_cca(&x, &y, &FitConfig::new(Method::Cca, 1)), Err(e) if e.is_singular_covariance()) {
                direct_fail += 1;
            }
        }
        let strong: Vec<f64> = phase
            .cells_for(Method::Cca)
            .filter(|c| c.t == 600 && c.gamma_shared == CORNER_HIGH)
            .map(|c| c.mean.unwrap_or(f64::NAN))
            .collect();
        let worst = strong.iter().copied().fold(f64::INFINITY, f64::min);
        outcome(
            singular == total && direct_fail == 9 && worst >= 0.8,
            format!(
                "T=60: {singular}/{total} grid trials and {direct_fail}/9 direct fits singular; T=600 γ_shared=1: min CCA RC′ {worst:.3} over {} cells (≥0.8)",
                strong.len()
            ),
        )
    });

    suite.run("4", "noise-floor magnitude", minute, || {
        let (hi, _) = estimate_rc0(100, 30, 30, 1, 20, 4).unwrap();
        let (lo, _) = estimate_rc0(100_000, 1, 1, 1, 20, 4).unwrap();
        outcome(hi > 1.0 && lo <= 0.02, format!("RC₀(T=100,k=30) = {hi:.3} (>1); RC₀(T=1e5,k=1) = {lo:.4} (≤0.02)"))
    });

    let sweep_start = Instant::now();
    let mut dim = SweepSpec::preset(Preset::Ci, ExperimentKind::DimSweep);
    dim.panels = vec![DimPanel { gamma_ratio: 0.1, m_ratio: 0.1 }];
    dim.master_seed = 20240602;
    let sweep = run_dimension_sweep(&dim).expect("dimension sweep");
    let sweep_time = sweep_start.elapsed();

    suite.run("5", "peak location", 15 * minute, || {
        let argmax = |m: Method| {
            sweep
                .cells_for(m)
                .filter_map(|c| c.mean.map(|v| (c.k, v)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(k, _)| k)
                .unwrap_or(0)
        };
        let grid = &dim.k_grid;
        let near = |k: usize, target: usize| {
            let i = grid.iter().position(|&g| g == k);
            let j = grid.iter().position(|&g| g == target);
            matches!((i, j), (Some(i), Some(j)) if i.abs_diff(j) <= 1)
        };
        let (r, p) = (argmax(Method::Rcca), argmax(Method::Pca));
        let curve = |m: Method| {
            sweep.cells_for(m).map(|c| format!("{}:{:.2}", c.k, c.mean.unwrap_or(f64::NAN))).collect::<Vec<_>>().join(" ")
        };
        outcome(
            near(r, 10) && near(p, 110) && sweep_time < 15 * minute,
            format!(
                "rCCA argmax k={r} (10±1 step), PCA argmax k={p} (110±1 step); sweep {:.1}s; rCCA [{}]; PCA [{}]",
                sweep_time.as_secs_f64(),
                curve(Method::Rcca),
                curve(Method::Pca)
            ),
        )
    });

    suite.run("6", "SDR dominance", minute, || {
        let (a, da) = dominance(&phase, 1, 1);
        let (b, db) = dominance(&sweep, 0, 0);
        outcome(a && b, format!("phase diagram: {da}; dimension sweep: {db}"))
    });

    suite.run("7", "oracle equivalences", Duration::from_secs(30), || {
        let mut notes = Vec::new();
        let mut pass = true;

        let mut r = rng(70);
        let x = gaussian(&mut r, 8, 5);
        let c = brute_cross(&x, &x);
        let direct = fit_pca_cov(&c, 5).unwrap();
        let defl = fit_pca_deflated(&c, 5, 1e-14, 100_000).unwrap();
        let ev = direct.scores.iter().zip(&defl.scores).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let cos = principal_cosines(&direct.w, &defl.w).into_iter().fold(1.0, f64::min);
        pass &= ev < 1e-8 && cos >= 1.0 - 1e-8;
        notes.push(format!("PCA Δλ={ev:.1e} cos={cos:.12}"));

        let shared = gaussian(&mut r, 50, 2);
        let x = gaussian(&mut r, 50, 6) + &shared * gaussian(&mut r, 2, 6);
        let y = gaussian(&mut r, 50, 4) + &shared * gaussian(&mut r, 2, 4);
        let k = inv_sqrt(&brute_cross(&x, &x)) * brute_cross(&x, &y) * inv_sqrt(&brute_cross(&y, &y));
        let oracle = descending(k.singular_values().iter().copied().collect());
        let fitted = fit_cca(&x, &y, &FitConfig::new(Method::Cca, 4)).unwrap();
        let dc = oracle.iter().zip(&fitted.scores).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pass &= dc < 1e-6;
        notes.push(format!("CCA Δρ={dc:.1e}"));

        let shared = gaussian(&mut r, 5000, 3);
        let x = gaussian(&mut r, 5000, 20) + &shared * gaussian(&mut r, 3, 20) * 0.5;
        let y = gaussian(&mut r, 5000, 20) + &shared * gaussian(&mut r, 3, 20) * 0.5;
        let one = fit_rcca(&x, &y, &FitConfig::new(Method::Rcca, 3).with_regularization(1.0, 1.0)).unwrap();
        let pls = fit_pls(&x, &y, &FitConfig::new(Method::Pls, 3)).unwrap();
        let c1 = principal_cosines(&one.weights_x, &pls.weights_x)
            .into_iter()
            .chain(principal_cosines(&one.weights_y, &pls.weights_y))
            .fold(1.0, f64::min);
        let zero = fit_rcca(&x, &y, &FitConfig::new(Method::Rcca, 3).with_regularization(0.0, 0.0)).unwrap();
        let cca = fit_cca(&x, &y, &FitConfig::new(Method::Cca, 3)).unwrap();
        let c0 = principal_cosines(&zero.w_x, &cca.w_x)
            .into_iter()
            .chain(principal_cosines(&zero.w_y, &cca.w_y))
            .fold(1.0, f64::min);
        pass &= c1 >= 1.0 - 1e-6 && c0 >= 1.0 - 1e-6;
        notes.push(format!("rCCA(1)~PLS cos={c1:.9} rCCA(0)~CCA cos={c0:.9}"));

        let x = gaussian(&mut r, 5, 3);
        let y = gaussian(&mut r, 5, 2);
        let b = covariance_blocks(&x, &y).unwrap();
        let db = (b.c_xx - brute_cross(&x, &x))
            .amax()
            .max((b.c_yy - brute_cross(&y, &y)).amax())
            .max((b.c_xy - brute_cross(&x, &y)).amax());
        pass &= db < 1e-12;
        notes.push(format!("blocks Δ={db:.1e}"));
        outcome(pass, notes.join("; "))
    });

    suite.run("8", "spectrum gap", 5 * minute, || {
        let strong_base = ModelParams { n_x: 200, n_y: 200, t: 10_000, m_self_x: 10, m_self_y: 10, m_shared: 10, ..Default::default() };
        let strong = params_from_snr(&strong_base, 1.0, 10.0).unwrap();
        let proj = sample_quenched(&strong, 81).unwrap();
        let s = run_spectrum_analysis(&strong, &proj, 82, 20).unwrap();
        let weak_base = ModelParams { n_x: 200, n_y: 200, t: 100, m_self_x: 100, m_self_y: 100, m_shared: 10, ..Default::default() };
        let weak = params_from_snr(&weak_base, 1.0, 0.1).unwrap();
        let proj = sample_quenched(&weak, 83).unwrap();
        let w = run_spectrum_analysis(&weak, &proj, 84, 20).unwrap();
        let (gs, gw) = (s.cross_gap(10), w.cross_gap(10));
        outcome(gs >= 2.0 && gw <= 1.5, format!("strong s10/s11 = {gs:.2} (≥2); weak undersampled s10/s11 = {gw:.3} (≤1.5)"))
    });

    suite.run("9", "noisy-MNIST ordering", 30 * minute, || {
        let dir = default_data_dir();
        let cache = tempfile::tempdir().expect("temporary cache");
        let (train, test) = match build_dataset_cached(&dir, cache.path(), 20240609) {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("MNIST unavailable in {}: {e}", dir.display())),
        };
        let spec = MnistSpec::default();
        let g = run_mnist_sweep(&train, &test, &spec.methods, &spec.k_grid, &spec.t_list, 20240609, spec.rc0_trials)
            .expect("MNIST sweep");
        let at = |m: Method, t: usize, k: usize| {
            g.cells.iter().find(|c| c.method == m && c.t == t && c.k == k).and_then(|c| c.mean).unwrap_or(f64::NAN)
        };
        let (r, p) = (at(Method::Rcca, 1000, 10), at(Method::Pca, 1000, 10));
        let early = r >= 1.2 * p;
        let mut worst: f64 = 0.0;
        let mut gaps = Vec::new();
        for &k in &spec.k_grid {
            let (c, rc) = (at(Method::Cca, train.n, k), at(Method::Rcca, train.n, k));
            let gap = if c.is_nan() { f64::INFINITY } else { (c - rc).abs() / rc.abs() };
            worst = worst.max(gap);
            gaps.push(format!("{k}:{c:.3}/{rc:.3}"));
        }
        outcome(
            early && worst <= 0.1,
            format!(
                "T=1000 k=10: rCCA {r:.3} vs PCA {p:.3} (ratio {:.2}, need ≥1.20); T={}: max |CCA−rCCA|/rCCA = {worst:.3} (≤0.10); CCA/rCCA by k [{}]",
                r / p,
                train.n,
                gaps.join(" ")
            ),
        )
    });

    suite.run("10", "reproducibility across worker counts", 5 * minute, || {
        let mut spec = phase_spec();
        spec.gamma_self_grid = vec![CORNER_LOW, CORNER_HIGH];
        spec.gamma_shared_grid = vec![CORNER_LOW, CORNER_HIGH];
        let csv = |workers: usize| {
            let g = with_workers(Some(workers), || run_phase_diagram(&spec)).unwrap().unwrap();
            let mut buf = Vec::new();
            g.write_results_csv(&mut buf).unwrap();
            buf
        };
        let (a, b, c) = (csv(1), csv(3), csv(1));
        let full: Vec<_> = phase
            .records
            .iter()
            .filter(|r| [CORNER_LOW, CORNER_HIGH].contains(&r.gamma_self) && [CORNER_LOW, CORNER_HIGH].contains(&r.gamma_shared))
            .cloned()
            .collect();
        let mut from_full = Vec::new();
        sdrbench_core::experiments::write_records_csv(&mut from_full, &full).unwrap();
        outcome(
            a == b && a == c && a == from_full,
            format!("{} bytes; 1 vs 3 workers identical: {}; rerun identical: {}; matches full-grid rows: {}", a.len(), a == b, a == c, a == from_full),
        )
    });

    if suite.failures > 0 {
        println!("{} criteria failed", suite.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
