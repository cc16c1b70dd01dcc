//! Run configuration files.
//!
//! A config is a TOML document with a schema version, an experiment kind, an
//! optional preset and a `[spec]` table for that kind:
//!
//! ```toml
//! version = 1
//! experiment = "phase-diagram"
//! preset = "ci"
//!
//! [spec]
//! t_list = [100, 1000]
//! ```
//!
//! Keys in `[spec]` override the preset, which in turn overrides the
//! built-in defaults. Tables merge key by key; arrays are replaced whole.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use sdrbench_core::experiments::{ExperimentKind, NoiseFloorSpec, Preset, SpectrumSpec, SweepSpec};
use sdrbench_core::mnist::{MnistSpec, SampleSize};
use sdrbench_core::model::{params_from_snr, ModelParams};
use sdrbench_core::{FitConfig, Method};

pub const CONFIG_VERSION: i64 = 1;

/// Why a config was rejected. Always maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub source: String,
    /// 1-based line and column, when the problem has a position in the file.
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl ConfigError {
    pub fn new(source: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { source: source.into(), location: None, message: message.into() }
    }

    fn from_toml(source: &str, text: &str, err: &toml::de::Error) -> Self {
        let location = err.span().map(|s| line_column(text, s.start));
        ConfigError { source: source.to_string(), location, message: err.message().trim().to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((line, col)) => write!(f, "{}:{line}:{col}: {}", self.source, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Named starting point for a spec. `Custom` means the built-in defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PresetName {
    Paper,
    Ci,
    #[default]
    Custom,
}

impl PresetName {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Paper => "paper",
            PresetName::Ci => "ci",
            PresetName::Custom => "custom",
        }
    }
}

impl std::str::FromStr for PresetName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(PresetName::Paper),
            "ci" => Ok(PresetName::Ci),
            "custom" => Ok(PresetName::Custom),
            other => Err(format!("unknown preset {other:?} (expected \"paper\", \"ci\" or \"custom\")")),
        }
    }
}

/// A validated spec for exactly one experiment kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    PhaseDiagram(SweepSpec),
    DimSweep(SweepSpec),
    NoiseFloor(NoiseFloorSpec),
    Spectrum(SpectrumSpec),
    Mnist(MnistSpec),
}

impl ExperimentSpec {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentSpec::PhaseDiagram(_) => ExperimentKind::PhaseDiagram,
            ExperimentSpec::DimSweep(_) => ExperimentKind::DimSweep,
            ExperimentSpec::NoiseFloor(_) => ExperimentKind::NoiseFloor,
            ExperimentSpec::Spectrum(_) => ExperimentKind::Spectrum,
            ExperimentSpec::Mnist(_) => ExperimentKind::Mnist,
        }
    }

    pub fn validate(&self) -> sdrbench_core::Result<()> {
        match self {
            ExperimentSpec::PhaseDiagram(s) => s.validate_phase_diagram(),
            ExperimentSpec::DimSweep(s) => s.validate_dim_sweep(),
            ExperimentSpec::NoiseFloor(s) => s.validate(),
            ExperimentSpec::Spectrum(s) => s.params.validate(),
            ExperimentSpec::Mnist(s) => s.validate(),
        }
    }

    /// Replace the master seed.
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentSpec::PhaseDiagram(s) | ExperimentSpec::DimSweep(s) => s.master_seed = seed,
            ExperimentSpec::NoiseFloor(s) => s.master_seed = seed,
            ExperimentSpec::Spectrum(s) => s.master_seed = seed,
            ExperimentSpec::Mnist(s) => s.seed = seed,
        }
    }

    fn to_value(&self) -> Value {
        let v = match self {
            ExperimentSpec::PhaseDiagram(s) | ExperimentSpec::DimSweep(s) => Value::try_from(s),
            ExperimentSpec::NoiseFloor(s) => Value::try_from(s),
            ExperimentSpec::Spectrum(s) => Value::try_from(s),
            ExperimentSpec::Mnist(s) => Value::try_from(s),
        };
        v.expect("built-in specs serialize to TOML")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub preset: PresetName,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    /// The preset spec for `kind` with no file involved.
    pub fn from_preset(kind: ExperimentKind, preset: PresetName) -> Self {
        RunConfig { spec: preset_spec(kind, preset), preset, out: None, workers: None }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.spec.kind()
    }

    /// A config file that loads back to this run (with every key spelled out).
    pub fn to_toml(&self) -> String {
        let mut doc = Table::new();
        doc.insert("version".into(), Value::Integer(CONFIG_VERSION));
        doc.insert("experiment".into(), Value::String(self.kind().as_str().into()));
        doc.insert("preset".into(), Value::String(PresetName::Custom.as_str().into()));
        if let Some(w) = self.workers {
            doc.insert("workers".into(), Value::Integer(w as i64));
        }
        doc.insert("spec".into(), self.spec.to_value());
        toml::to_string(&doc).expect("config serializes")
    }
}

/// Built-in spec for a kind and preset.
pub fn preset_spec(kind: ExperimentKind, preset: PresetName) -> ExperimentSpec {
    let sweep = |p: Option<Preset>| match p {
        Some(p) => SweepSpec::preset(p, kind),
        None => SweepSpec::default(),
    };
    let core_preset = match preset {
        PresetName::Paper => Some(Preset::Paper),
        PresetName::Ci => Some(Preset::Ci),
        PresetName::Custom => None,
    };
    match kind {
        ExperimentKind::PhaseDiagram => ExperimentSpec::PhaseDiagram(sweep(core_preset)),
        ExperimentKind::DimSweep => ExperimentSpec::DimSweep(match core_preset {
            Some(_) => sweep(core_preset),
            None => SweepSpec {
                base_params: ModelParams { m_shared: 10, ..Default::default() },
                methods: vec![FitConfig::new(Method::Pca, 1), FitConfig::new(Method::Rcca, 1)],
                t_list: vec![1000],
                ..Default::default()
            },
        }),
        ExperimentKind::NoiseFloor => ExperimentSpec::NoiseFloor(match preset {
            PresetName::Ci => NoiseFloorSpec { t_list: vec![100, 1000], k_list: vec![1, 5, 30], n_trials: 3, ..Default::default() },
            _ => NoiseFloorSpec::default(),
        }),
        ExperimentKind::Spectrum => ExperimentSpec::Spectrum(match preset {
            PresetName::Custom => SpectrumSpec::default(),
            // Strong shared signal: ten shared directions well above the bulk.
            p => {
                let t = if p == PresetName::Paper { 10_000 } else { 2_000 };
                let base = ModelParams { n_x: 200, n_y: 200, t, m_self_x: 10, m_self_y: 10, m_shared: 10, ..Default::default() };
                let params = params_from_snr(&base, 1.0, 10.0).expect("preset SNRs are valid");
                SpectrumSpec { params, n_top: 40, ..Default::default() }
            }
        }),
        ExperimentKind::Mnist => ExperimentSpec::Mnist(match preset {
            PresetName::Ci => MnistSpec {
                t_list: vec![SampleSize::Count(1000)],
                k_grid: vec![1, 2, 5, 10],
                methods: vec![FitConfig::new(Method::Pca, 1), FitConfig::new(Method::Rcca, 1)],
                rc0_trials: 5,
                ..Default::default()
            },
            _ => MnistSpec::default(),
        }),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<S> {
    version: Option<i64>,
    experiment: Option<String>,
    preset: Option<String>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    spec: Option<S>,
}

/// Read and validate a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    load_config_with(path, None)
}

/// [`load_config`] with the preset forced by the caller.
pub fn load_config_with(path: &Path, preset: Option<PresetName>) -> Result<RunConfig, ConfigError> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(&source, format!("cannot read file: {e}")))?;
    parse_config(&text, &source, preset)
}

/// Parse config text; `source` names it in error messages.
pub fn parse_config(text: &str, source: &str, preset: Option<PresetName>) -> Result<RunConfig, ConfigError> {
    let doc: Document<Table> = toml::from_str(text).map_err(|e| ConfigError::from_toml(source, text, &e))?;

    let kind = match &doc.experiment {
        None => return Err(ConfigError::new(source, "experiment kind missing")),
        Some(k) => k.parse::<ExperimentKind>().map_err(|_| {
            ConfigError::new(
                source,
                format!(
                    "unknown experiment kind {k:?} (expected one of: phase-diagram, dim-sweep, noise-floor, spectrum, mnist)"
                ),
            )
        })?,
    };
    match doc.version {
        None => return Err(ConfigError::new(source, format!("version missing (expected version = {CONFIG_VERSION})"))),
        Some(CONFIG_VERSION) => {}
        Some(v) => return Err(ConfigError::new(source, format!("unsupported version {v} (expected {CONFIG_VERSION})"))),
    }
    let preset = match (preset, &doc.preset) {
        (Some(p), _) => p,
        (None, Some(name)) => name.parse().map_err(|e: String| ConfigError::new(source, e))?,
        (None, None) => PresetName::Custom,
    };
    if doc.workers == Some(0) {
        return Err(ConfigError::new(source, "workers must be at least 1"));
    }

    // Re-read with the typed schema so unknown or mistyped keys point into the file.
    match kind {
        ExperimentKind::PhaseDiagram | ExperimentKind::DimSweep => check_schema::<SweepSpec>(text, source)?,
        ExperimentKind::NoiseFloor => check_schema::<NoiseFloorSpec>(text, source)?,
        ExperimentKind::Spectrum => check_schema::<SpectrumSpec>(text, source)?,
        ExperimentKind::Mnist => check_schema::<MnistSpec>(text, source)?,
    }

    let mut merged = preset_spec(kind, preset).to_value();
    if let Some(user) = doc.spec {
        merge(&mut merged, Value::Table(user));
    }
    let spec = typed(kind, merged).map_err(|e| ConfigError::new(source, format!("[spec]: {}", e.message().trim())))?;
    spec.validate().map_err(|e| ConfigError::new(source, format!("[spec]: {e}")))?;
    Ok(RunConfig { spec, preset, out: doc.out, workers: doc.workers })
}

fn check_schema<S: DeserializeOwned>(text: &str, source: &str) -> Result<(), ConfigError> {
    toml::from_str::<Document<S>>(text).map(drop).map_err(|e| ConfigError::from_toml(source, text, &e))
}

fn typed(kind: ExperimentKind, v: Value) -> Result<ExperimentSpec, toml::de::Error> {
    Ok(match kind {
        ExperimentKind::PhaseDiagram => ExperimentSpec::PhaseDiagram(v.try_into()?),
        ExperimentKind::DimSweep => ExperimentSpec::DimSweep(v.try_into()?),
        ExperimentKind::NoiseFloor => ExperimentSpec::NoiseFloor(v.try_into()?),
        ExperimentKind::Spectrum => ExperimentSpec::Spectrum(v.try_into()?),
        ExperimentKind::Mnist => ExperimentSpec::Mnist(v.try_into()?),
    })
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[derive(Serialize)]
struct Example<'a> {
    version: i64,
    experiment: &'a str,
    spec: Value,
}

/// Markdown page listing every key with its default and the preset overrides.
pub fn config_reference() -> String {
    let mut out = String::new();
    out.push_str("# Configuration reference\n\n");
    out.push_str("Top-level keys:\n\n");
    out.push_str("| key | meaning |\n|---|---|\n");
    for (k, v) in [
        ("version", "schema version, must be 1"),
        ("experiment", "phase-diagram, dim-sweep, noise-floor, spectrum or mnist"),
        ("preset", "paper, ci or custom (default custom: the values below)"),
        ("out", "output directory; `--out` takes precedence"),
        ("workers", "worker threads; `--workers` takes precedence"),
        ("spec", "table of experiment settings, merged over the preset"),
    ] {
        out.push_str(&format!("| `{k}` | {v} |\n"));
    }
    out.push_str("\n`--seed` replaces the master seed after merging.\n");

    for kind in [
        ExperimentKind::PhaseDiagram,
        ExperimentKind::DimSweep,
        ExperimentKind::NoiseFloor,
        ExperimentKind::Spectrum,
        ExperimentKind::Mnist,
    ] {
        let defaults = preset_spec(kind, PresetName::Custom).to_value();
        let example = Example { version: CONFIG_VERSION, experiment: kind.as_str(), spec: defaults.clone() };
        out.push_str(&format!("\n## {kind}\n\nDefaults:\n\n```toml\n"));
        out.push_str(&toml::to_string(&example).expect("defaults serialize"));
        out.push_str("```\n");
        for preset in [PresetName::Paper, PresetName::Ci] {
            let value = preset_spec(kind, preset).to_value();
            let mut changed = Table::new();
            diff(&defaults, &value, &mut changed);
            out.push_str(&format!("\nPreset `{}` changes:\n\n", preset.as_str()));
            if changed.is_empty() {
                out.push_str("nothing\n");
            } else {
                out.push_str("```toml\n");
                out.push_str(&toml::to_string(&changed).expect("presets serialize"));
                out.push_str("```\n");
            }
        }
    }
    out
}

/// Keys of `new` whose values differ from `old`, nested as in the source.
fn diff(old: &Value, new: &Value, out: &mut Table) {
    let (Value::Table(o), Value::Table(n)) = (old, new) else {
        return;
    };
    for (k, v) in n {
        match (o.get(k), v) {
            (Some(a @ Value::Table(_)), Value::Table(_)) => {
                let mut sub = Table::new();
                diff(a, v, &mut sub);
                if !sub.is_empty() {
                    out.insert(k.clone(), Value::Table(sub));
                }
            }
            (Some(a), b) if a == b => {}
            _ => {
                out.insert(k.clone(), v.clone());
            }
        }
    }
}
