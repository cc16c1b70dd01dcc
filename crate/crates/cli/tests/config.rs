use sdrbench_cli::config::{config_reference, parse_config, preset_spec, ExperimentSpec, PresetName, RunConfig};
use sdrbench_core::experiments::ExperimentKind;
use sdrbench_core::mnist::SampleSize;

fn parse(text: &str) -> Result<RunConfig, sdrbench_cli::ConfigError> {
    parse_config(text, "test.toml", None)
}

fn sweep(cfg: &RunConfig) -> &sdrbench_core::experiments::SweepSpec {
    match &cfg.spec {
        ExperimentSpec::PhaseDiagram(s) | ExperimentSpec::DimSweep(s) => s,
        other => panic!("not a sweep: {other:?}"),
    }
}

#[test]
fn empty_file_lacks_an_experiment_kind() {
    let err = parse("").unwrap_err();
    assert_eq!(err.message, "experiment kind missing");
    assert_eq!(err.to_string(), "test.toml: experiment kind missing");
}

#[test]
fn ci_preset_uses_small_dimensions_and_three_by_three_trials() {
    let cfg = parse("version = 1\nexperiment = \"phase-diagram\"\npreset = \"ci\"\n").unwrap();
    let s = sweep(&cfg);
    assert_eq!((s.base_params.n_x, s.base_params.n_y), (200, 200));
    assert_eq!((s.n_inner_trials, s.n_proj_trials), (3, 3));
    assert_eq!(cfg.preset, PresetName::Ci);
}

#[test]
fn misspelled_key_is_named_with_its_position() {
    let text = "version = 1\nexperiment = \"phase-diagram\"\n\n[spec]\ngamma_sharedd = [0.1]\n";
    let err = parse(text).unwrap_err();
    assert!(err.message.contains("gamma_sharedd"), "{err}");
    assert_eq!(err.location, Some((5, 1)));
}

#[test]
fn nested_unknown_keys_are_caught() {
    let text = "version = 1\nexperiment = \"spectrum\"\n[spec.params]\nn_z = 3\n";
    let err = parse(text).unwrap_err();
    assert!(err.message.contains("n_z"), "{err}");
    assert_eq!(err.location.map(|l| l.0), Some(4));
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let err = parse("version = 1\nexperiment = = \"spectrum\"\n").unwrap_err();
    let (line, col) = err.location.expect("position");
    assert_eq!(line, 2);
    assert!(col > 1);
    assert!(err.to_string().starts_with("test.toml:2:"), "{err}");
}

#[test]
fn mistyped_values_are_schema_errors() {
    let err = parse("version = 1\nexperiment = \"noise-floor\"\n[spec]\nn_trials = \"many\"\n").unwrap_err();
    assert!(err.message.contains("invalid type"), "{err}");
    assert_eq!(err.location.map(|l| l.0), Some(4));
}

#[test]
fn version_is_required_and_checked() {
    assert!(parse("experiment = \"spectrum\"\n").unwrap_err().message.contains("version missing"));
    assert!(parse("version = 2\nexperiment = \"spectrum\"\n").unwrap_err().message.contains("unsupported version 2"));
}

#[test]
fn unknown_kind_and_preset_are_rejected() {
    assert!(parse("version = 1\nexperiment = \"heatmap\"\n").unwrap_err().message.contains("unknown experiment kind"));
    assert!(parse("version = 1\nexperiment = \"spectrum\"\npreset = \"fast\"\n").unwrap_err().message.contains("unknown preset"));
}

#[test]
fn semantic_errors_are_reported() {
    let err = parse("version = 1\nexperiment = \"phase-diagram\"\n[spec]\nt_list = []\n").unwrap_err();
    assert!(err.message.contains("t_list"), "{err}");
    let err = parse("version = 1\nexperiment = \"mnist\"\n[spec]\nk_grid = [0]\n").unwrap_err();
    assert!(err.message.contains("k"), "{err}");
}

#[test]
fn spec_keys_merge_over_the_preset() {
    let text = "version = 1\nexperiment = \"phase-diagram\"\npreset = \"paper\"\nworkers = 2\n[spec]\nt_list = [300]\n[spec.base_params]\nm_shared = 4\n";
    let cfg = parse(text).unwrap();
    let s = sweep(&cfg);
    assert_eq!(s.t_list, vec![300]);
    assert_eq!(s.base_params.m_shared, 4);
    assert_eq!(s.base_params.n_x, 1000);
    assert_eq!(s.n_inner_trials, 10);
    assert_eq!(cfg.workers, Some(2));
}

#[test]
fn caller_preset_wins_over_the_file() {
    let cfg = parse_config("version = 1\nexperiment = \"phase-diagram\"\npreset = \"paper\"\n", "t", Some(PresetName::Ci)).unwrap();
    assert_eq!(sweep(&cfg).base_params.n_x, 200);
}

#[test]
fn mnist_sample_sizes_accept_all() {
    let cfg = parse("version = 1\nexperiment = \"mnist\"\n[spec]\nt_list = [1000, \"all\"]\n").unwrap();
    let ExperimentSpec::Mnist(s) = &cfg.spec else { panic!() };
    assert_eq!(s.t_list, vec![SampleSize::Count(1000), SampleSize::All]);
}

#[test]
fn resolved_configs_load_back_unchanged() {
    for kind in [
        ExperimentKind::PhaseDiagram,
        ExperimentKind::DimSweep,
        ExperimentKind::NoiseFloor,
        ExperimentKind::Spectrum,
        ExperimentKind::Mnist,
    ] {
        for preset in [PresetName::Paper, PresetName::Ci, PresetName::Custom] {
            let mut cfg = RunConfig::from_preset(kind, preset);
            cfg.workers = Some(3);
            let back = parse(&cfg.to_toml()).unwrap_or_else(|e| panic!("{kind}: {e}"));
            assert_eq!(back.spec, cfg.spec);
            assert_eq!(back.workers, Some(3));
        }
    }
}

#[test]
fn reference_page_covers_every_kind_and_its_defaults_parse() {
    let page = config_reference();
    for kind in ["phase-diagram", "dim-sweep", "noise-floor", "spectrum", "mnist"] {
        assert!(page.contains(&format!("## {kind}")), "{kind}");
    }
    let blocks: Vec<&str> = page.split("```toml\n").skip(1).map(|b| b.split("```").next().unwrap()).collect();
    let defaults: Vec<&&str> = blocks.iter().filter(|b| b.starts_with("version")).collect();
    assert_eq!(defaults.len(), 5);
    for block in defaults {
        let cfg = parse(block).unwrap();
        assert_eq!(cfg.spec, preset_spec(cfg.kind(), PresetName::Custom));
    }
}
