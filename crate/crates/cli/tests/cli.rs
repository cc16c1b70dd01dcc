use std::path::Path;
use std::process::{Command, Output};

use sdrbench_core::experiments::GridResult;
use sdrbench_core::mnist::{TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};
use sdrbench_core::model::{read_matrix_csv, write_matrix_csv};

fn sdrbench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdrbench"))
        .args(args)
        .current_dir(dir)
        .env_remove("SDRBENCH_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY_PHASE: &str = r#"version = 1
experiment = "phase-diagram"
preset = "ci"

[spec]
t_list = [40]
gamma_self_grid = [0.2, 1.0]
gamma_shared_grid = [0.2, 1.0]
n_inner_trials = 2
n_proj_trials = 1
rc0_trials = 3

[spec.base_params]
n_x = 12
n_y = 12
"#;

#[test]
fn empty_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "").unwrap();
    let o = sdrbench(dir.path(), &["phase-diagram", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment kind missing"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_with_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "version = 1\nexperiment = \"phase-diagram\"\n[spec]\ngamma_sharedd = 1\n").unwrap();
    let o = sdrbench(dir.path(), &["phase-diagram", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("c.toml:4:1") && stderr(&o).contains("gamma_sharedd"), "{}", stderr(&o));
}

#[test]
fn config_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), TINY_PHASE).unwrap();
    let o = sdrbench(dir.path(), &["dim-sweep", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("subcommand is dim-sweep"), "{}", stderr(&o));
}

#[test]
fn bad_flags_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sdrbench(dir.path(), &["spectrum", "--workers", "0"]).status.code(), Some(2));
    assert_eq!(sdrbench(dir.path(), &["spectrum", "--preset", "huge"]).status.code(), Some(2));
    assert_eq!(sdrbench(dir.path(), &["mnist", "--k", "0", "--offline"]).status.code(), Some(2));
}

#[test]
fn phase_diagram_run_writes_reloadable_results_and_stable_figures() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), TINY_PHASE).unwrap();
    let run = |out: &str, workers: &str| {
        let o = sdrbench(dir.path(), &["phase-diagram", "--config", "c.toml", "--out", out, "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run("a", "1");
    run("b", "2");
    let a = dir.path().join("a");
    assert!(a.join("config.toml").is_file());
    for f in ["results.csv", "grid.json", "phase_diagram_T40.svg"] {
        assert!(a.join(f).is_file(), "{f} missing");
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs between worker counts");
    }

    let grid = GridResult::load(&a).unwrap();
    assert_eq!(grid.cells.len(), 4 * 4);
    let mut csv = Vec::new();
    grid.write_results_csv(&mut csv).unwrap();
    assert_eq!(csv, std::fs::read(a.join("results.csv")).unwrap());

    let svg = std::fs::read_to_string(a.join("phase_diagram_T40.svg")).unwrap();
    assert_eq!(svg.matches("<rect class=\"cell").count(), 5 * 4);
    assert!(svg.contains(">noise<"));

    let o = sdrbench(dir.path(), &["phase-diagram", "--config", "a/config.toml", "--out", "c"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(a.join("results.csv")).unwrap(), std::fs::read(dir.path().join("c/results.csv")).unwrap());
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), TINY_PHASE).unwrap();
    for (out, seed) in [("s1", "1"), ("s2", "2")] {
        let o = sdrbench(dir.path(), &["phase-diagram", "--config", "c.toml", "--out", out, "--seed", seed]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let echo = std::fs::read_to_string(dir.path().join("s2/config.toml")).unwrap();
    assert!(echo.contains("master_seed = 2"), "{echo}");
    assert_ne!(std::fs::read(dir.path().join("s1/results.csv")).unwrap(), std::fs::read(dir.path().join("s2/results.csv")).unwrap());
}

#[test]
fn small_runs_of_the_other_experiments_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("dim.toml"),
        "version = 1\nexperiment = \"dim-sweep\"\n[spec]\nt_list = [60]\nk_grid = [1, 3]\nn_inner_trials = 1\nn_proj_trials = 1\nrc0_trials = 2\npanels = [{ gamma_ratio = 1.0, m_ratio = 1.0 }, { gamma_ratio = 10.0, m_ratio = 0.5 }]\n[spec.base_params]\nn_x = 10\nn_y = 10\nm_shared = 2\n",
    )
    .unwrap();
    std::fs::write(d.join("noise.toml"), "version = 1\nexperiment = \"noise-floor\"\n[spec]\nt_list = [50, 200]\nk_list = [1, 4]\nn_trials = 2\n").unwrap();
    std::fs::write(d.join("spec.toml"), "version = 1\nexperiment = \"spectrum\"\n[spec]\nn_top = 5\n[spec.params]\nn_x = 8\nn_y = 6\nt = 100\n").unwrap();

    let o = sdrbench(d, &["dim-sweep", "--config", "dim.toml", "--out", "dim"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(d.join("dim/dim_sweep.svg")).unwrap();
    assert_eq!(svg.matches("class=\"panel-title\"").count(), 2);
    assert_eq!(svg.matches("class=\"legend-entry\"").count(), 2);

    let o = sdrbench(d, &["noise-floor", "--config", "noise.toml", "--out", "noise"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let grid = GridResult::load(&d.join("noise")).unwrap();
    assert_eq!(grid.rc0.len(), 4);
    assert!(d.join("noise/noise_floor.svg").is_file());

    let o = sdrbench(d, &["spectrum", "--config", "spec.toml", "--out", "spec"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("spec/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("index,c_xx,c_xy\n"));
    assert!(d.join("spec/spectrum.svg").is_file() && d.join("spec/spectrum.json").is_file());
}

#[test]
fn fit_then_transform_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let x = nalgebra::DMatrix::from_fn(30, 4, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * j as f64);
    let y = nalgebra::DMatrix::from_fn(30, 3, |i, j| x[(i, j)] + ((i * 5 + j) % 7) as f64 * 0.3);
    for (name, m) in [("x.csv", &x), ("y.csv", &y)] {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, m, "c").unwrap();
        std::fs::write(d.join(name), buf).unwrap();
    }
    let o = sdrbench(d, &["fit", "--x", "x.csv", "--y", "y.csv", "--method", "rcca", "--k", "2", "--out", "model"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("rCCA k=2 scores"));

    let o = sdrbench(d, &["transform", "--bundle", "model/projection.json", "--x", "x.csv", "--out", "z"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!d.join("z/z_y.csv").exists());
    let z = read_matrix_csv(std::io::BufReader::new(std::fs::File::open(d.join("z/z_x.csv")).unwrap())).unwrap();

    let cfg = sdrbench_core::FitConfig::new(sdrbench_core::Method::Rcca, 2);
    let pair = sdrbench_core::dr::fit(&x, &y, &cfg).unwrap();
    assert!((z - pair.transform_x(&x).unwrap()).amax() < 1e-12);

    let o = sdrbench(d, &["fit", "--x", "x.csv", "--y", "y.csv", "--method", "pca", "--k", "9"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = sdrbench(d, &["transform", "--bundle", "model/projection.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = sdrbench(d, &["transform", "--bundle", "missing.json", "--x", "x.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_reference_is_printed_or_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdrbench(dir.path(), &["config-reference"]);
    assert_eq!(o.status.code(), Some(0));
    let page = String::from_utf8(o.stdout).unwrap();
    assert!(page.starts_with("# Configuration reference"));
    let o = sdrbench(dir.path(), &["config-reference", "--out", "docs"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.path().join("docs/config-reference.md")).unwrap(), page);
}

#[test]
fn offline_mnist_without_files_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdrbench(dir.path(), &["mnist", "--offline", "--data-dir", "nothing-here", "--out", "m"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("offline"), "{}", stderr(&o));
}

fn idx_images(n: usize, seed: usize) -> Vec<u8> {
    let mut v = Vec::new();
    for x in [2051u32, n as u32, 28, 28] {
        v.extend_from_slice(&x.to_be_bytes());
    }
    for i in 0..n {
        let label = i % 3;
        for p in 0..784 {
            let (r, c) = (p / 28, p % 28);
            let stroke = match label {
                0 => (r as i32 - 14).abs() < 3,
                1 => (c as i32 - 14).abs() < 3,
                _ => (r as i32 - c as i32).abs() < 3,
            };
            let jitter = ((i * 31 + p * 17 + seed) % 50) as u8;
            v.push(if stroke && (4..24).contains(&r) && (4..24).contains(&c) { 200 + jitter } else { jitter / 10 });
        }
    }
    v
}

fn idx_labels(n: usize) -> Vec<u8> {
    let mut v = Vec::new();
    for x in [2049u32, n as u32] {
        v.extend_from_slice(&x.to_be_bytes());
    }
    v.extend((0..n).map(|i| (i % 3) as u8));
    v
}

#[test]
fn mnist_runs_end_to_end_on_a_small_local_copy() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(data.join(TRAIN_IMAGES), idx_images(240, 1)).unwrap();
    std::fs::write(data.join(TRAIN_LABELS), idx_labels(240)).unwrap();
    std::fs::write(data.join(TEST_IMAGES), idx_images(60, 2)).unwrap();
    std::fs::write(data.join(TEST_LABELS), idx_labels(60)).unwrap();

    let o = sdrbench(
        dir.path(),
        &["mnist", "--offline", "--data-dir", "data", "--t", "100,all", "--k", "1,2", "--preset", "ci", "--out", "m", "--bins", "10"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = dir.path().join("m");
    for f in ["results.csv", "grid.json", "mnist.svg", "histograms.csv", "histograms.svg", "config.toml"] {
        assert!(m.join(f).is_file(), "{f} missing");
    }
    let grid = GridResult::load(&m).unwrap();
    let ts: std::collections::BTreeSet<usize> = grid.cells.iter().map(|c| c.t).collect();
    assert_eq!(ts.into_iter().collect::<Vec<_>>(), vec![100, 240]);
    let svg = std::fs::read_to_string(m.join("mnist.svg")).unwrap();
    assert_eq!(svg.matches("class=\"panel-title\"").count(), 2);
    assert_eq!(std::fs::read_to_string(m.join("histograms.csv")).unwrap().lines().count(), 11);
}
