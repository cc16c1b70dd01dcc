use serde::{Deserialize, Serialize};

use crate::dr::{FitConfig, Method};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_RC0_TRIALS;
use crate::model::ModelParams;

/// One panel of a dimension sweep: `γ̃ = γ_shared / γ_self` and
/// `m̃ = m_shared / m_self`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimPanel {
    pub gamma_ratio: f64,
    pub m_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// Dimensions and fixed variances; `t` and the signal variances are
    /// overwritten per cell.
    pub base_params: ModelParams,
    pub methods: Vec<FitConfig>,
    pub gamma_self_grid: Vec<f64>,
    pub gamma_shared_grid: Vec<f64>,
    /// Retained dimensions for dimension sweeps. Method `k` is ignored there.
    pub k_grid: Vec<usize>,
    pub panels: Vec<DimPanel>,
    /// Self SNR held fixed in dimension sweeps.
    pub gamma_self: f64,
    pub t_list: Vec<usize>,
    pub n_inner_trials: usize,
    pub n_proj_trials: usize,
    /// Test-set size; `None` means the training size.
    pub t_test: Option<usize>,
    pub rc0_trials: usize,
    pub center: bool,
    pub master_seed: u64,
}

/// `n` equally spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn default_gamma_grid() -> Vec<f64> {
    linspace(0.05, 1.0, 8)
}

fn all_methods(k: usize) -> Vec<FitConfig> {
    Method::ALL.iter().map(|&m| FitConfig::new(m, k)).collect()
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            base_params: ModelParams::default(),
            methods: all_methods(1),
            gamma_self_grid: default_gamma_grid(),
            gamma_shared_grid: default_gamma_grid(),
            k_grid: vec![2, 5, 10, 15, 30, 60, 110, 150],
            panels: default_panels(),
            gamma_self: 1.0,
            t_list: vec![600],
            n_inner_trials: 10,
            n_proj_trials: 10,
            t_test: None,
            rc0_trials: DEFAULT_RC0_TRIALS,
            center: true,
            master_seed: 0,
        }
    }
}

/// The 3 × 3 layout `γ̃ ∈ {0.1, 1, 10}` by `m̃ ∈ {10, 1, 0.1}`.
pub fn default_panels() -> Vec<DimPanel> {
    let mut out = Vec::new();
    for gamma_ratio in [0.1, 1.0, 10.0] {
        for m_ratio in [10.0, 1.0, 0.1] {
            out.push(DimPanel { gamma_ratio, m_ratio });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PhaseDiagram,
    DimSweep,
    NoiseFloor,
    Spectrum,
    Mnist,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::PhaseDiagram => "phase-diagram",
            ExperimentKind::DimSweep => "dim-sweep",
            ExperimentKind::NoiseFloor => "noise-floor",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Mnist => "mnist",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "phase-diagram" => ExperimentKind::PhaseDiagram,
            "dim-sweep" => ExperimentKind::DimSweep,
            "noise-floor" => ExperimentKind::NoiseFloor,
            "spectrum" => ExperimentKind::Spectrum,
            "mnist" => ExperimentKind::Mnist,
            other => return Err(Error::invalid(format!("unknown experiment kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Paper,
    Ci,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "ci" => Ok(Preset::Ci),
            other => Err(Error::invalid(format!("unknown preset {other:?} (expected \"paper\" or \"ci\")"))),
        }
    }
}

impl SweepSpec {
    /// Preset sweep for phase diagrams or dimension sweeps.
    pub fn preset(preset: Preset, kind: ExperimentKind) -> Self {
        let mut s = SweepSpec::default();
        let n = match preset {
            Preset::Paper => 1000,
            Preset::Ci => 200,
        };
        let trials = match preset {
            Preset::Paper => 10,
            Preset::Ci => 3,
        };
        s.base_params.n_x = n;
        s.base_params.n_y = n;
        s.n_inner_trials = trials;
        s.n_proj_trials = trials;
        match kind {
            ExperimentKind::DimSweep => {
                s.base_params.m_shared = 10;
                s.t_list = vec![1000];
                s.methods = vec![FitConfig::new(Method::Pca, 1), FitConfig::new(Method::Rcca, 1)];
                if preset == Preset::Paper {
                    s.k_grid = vec![2, 5, 10, 15, 30, 60, 110, 150, 300, 500];
                }
            }
            _ => {
                s.t_list = match preset {
                    Preset::Paper => vec![100, 300, 1000, 3000],
                    Preset::Ci => vec![60, 600],
                };
            }
        }
        s
    }

    pub fn t_test_for(&self, t: usize) -> usize {
        self.t_test.unwrap_or(t)
    }

    fn validate_common(&self) -> Result<()> {
        let mut p = self.base_params.clone();
        p.t = self.t_list.first().copied().unwrap_or(1);
        p.validate()?;
        if self.methods.is_empty() {
            return Err(Error::invalid("methods must not be empty"));
        }
        if self.t_list.is_empty() {
            return Err(Error::invalid("t_list must not be empty"));
        }
        if self.t_list.iter().any(|&t| t < 2) {
            return Err(Error::invalid("every T must be at least 2"));
        }
        if self.t_test == Some(0) || self.t_test == Some(1) {
            return Err(Error::invalid("t_test must be at least 2"));
        }
        if self.n_inner_trials == 0 || self.n_proj_trials == 0 || self.rc0_trials == 0 {
            return Err(Error::invalid("trial counts must be at least 1"));
        }
        if self.base_params.m_shared == 0 {
            return Err(Error::invalid("m_shared must be at least 1 for RC"));
        }
        let mut seen = Vec::new();
        for cfg in &self.methods {
            let key = (cfg.method, cfg.k);
            if seen.contains(&key) {
                return Err(Error::invalid(format!("method {} with k = {} listed twice", cfg.method, cfg.k)));
            }
            seen.push(key);
        }
        Ok(())
    }

    pub fn validate_phase_diagram(&self) -> Result<()> {
        self.validate_common()?;
        if self.gamma_self_grid.is_empty() || self.gamma_shared_grid.is_empty() {
            return Err(Error::invalid("gamma grids must not be empty"));
        }
        for g in self.gamma_self_grid.iter().chain(&self.gamma_shared_grid) {
            if !(g.is_finite() && *g >= 0.0) {
                return Err(Error::invalid(format!("gamma {g} must be finite and non-negative")));
            }
        }
        let (nx, ny) = (self.base_params.n_x, self.base_params.n_y);
        for cfg in &self.methods {
            cfg.validate(nx, ny)?;
        }
        Ok(())
    }

    pub fn validate_dim_sweep(&self) -> Result<()> {
        self.validate_common()?;
        if self.k_grid.is_empty() {
            return Err(Error::invalid("k_grid must not be empty"));
        }
        if self.panels.is_empty() {
            return Err(Error::invalid("panels must not be empty"));
        }
        if !(self.gamma_self.is_finite() && self.gamma_self > 0.0) {
            return Err(Error::invalid("gamma_self must be positive"));
        }
        let (nx, ny) = (self.base_params.n_x, self.base_params.n_y);
        for cfg in &self.methods {
            for &k in &self.k_grid {
                FitConfig { k, ..cfg.clone() }.validate(nx, ny)?;
            }
        }
        for p in &self.panels {
            self.panel_params(p)?;
        }
        Ok(())
    }

    /// `(m_self, γ_shared)` for a dimension-sweep panel.
    pub fn panel_params(&self, panel: &DimPanel) -> Result<(usize, f64)> {
        if !(panel.m_ratio > 0.0 && panel.gamma_ratio >= 0.0 && panel.gamma_ratio.is_finite()) {
            return Err(Error::invalid(format!("invalid panel {panel:?}")));
        }
        let m = self.base_params.m_shared as f64 / panel.m_ratio;
        let m_self = m.round();
        if (m - m_self).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::invalid(format!(
                "m_shared / m_ratio = {m} is not an integer self-signal count"
            )));
        }
        let m_self = m_self as usize;
        if m_self > self.base_params.n_x.min(self.base_params.n_y) {
            return Err(Error::invalid(format!("panel {panel:?} needs m_self = {m_self} above N")));
        }
        Ok((m_self, panel.gamma_ratio * self.gamma_self))
    }
}

/// Noise-floor map request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseFloorSpec {
    pub t_list: Vec<usize>,
    pub k_list: Vec<usize>,
    pub m_shared: usize,
    pub n_trials: usize,
    pub master_seed: u64,
}

impl Default for NoiseFloorSpec {
    fn default() -> Self {
        NoiseFloorSpec {
            t_list: vec![100, 300, 1000, 3000],
            k_list: vec![1, 2, 5, 10, 20, 30],
            m_shared: 1,
            n_trials: 10,
            master_seed: 0,
        }
    }
}

impl NoiseFloorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_list.is_empty() || self.k_list.is_empty() {
            return Err(Error::invalid("t_list and k_list must not be empty"));
        }
        if self.t_list.iter().any(|&t| t < 2) || self.k_list.contains(&0) {
            return Err(Error::invalid("T must be at least 2 and k at least 1"));
        }
        if self.n_trials == 0 || self.m_shared == 0 {
            return Err(Error::invalid("n_trials and m_shared must be at least 1"));
        }
        Ok(())
    }
}

/// Singular spectra of one generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    pub params: ModelParams,
    pub n_top: usize,
    pub center: bool,
    pub master_seed: u64,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec { params: ModelParams::default(), n_top: 40, center: true, master_seed: 0 }
    }
}
