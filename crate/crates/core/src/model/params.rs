use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions and component variances of the planted two-view model
///
/// `X̃ = R_X + U_X V_X + P Q_X` and `Ỹ = R_Y + U_Y V_Y + P Q_Y`, each column
/// then standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub n_x: usize,
    pub n_y: usize,
    pub t: usize,
    pub m_self_x: usize,
    pub m_self_y: usize,
    pub m_shared: usize,
    pub var_r_x: f64,
    pub var_r_y: f64,
    pub var_u_x: f64,
    pub var_u_y: f64,
    pub var_p: f64,
    pub var_v_x: f64,
    pub var_v_y: f64,
    pub var_q_x: f64,
    pub var_q_y: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n_x: 200,
            n_y: 200,
            t: 600,
            m_self_x: 1,
            m_self_y: 1,
            m_shared: 1,
            var_r_x: 1.0,
            var_r_y: 1.0,
            var_u_x: 1.0,
            var_u_y: 1.0,
            var_p: 1.0,
            var_v_x: 1.0,
            var_v_y: 1.0,
            var_q_x: 1.0,
            var_q_y: 1.0,
        }
    }
}

/// Per-modality signal-to-noise ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snr {
    pub gamma_self_x: f64,
    pub gamma_self_y: f64,
    pub gamma_shared_x: f64,
    pub gamma_shared_y: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 || self.n_y == 0 {
            return Err(Error::invalid("n_x and n_y must be positive"));
        }
        if self.t == 0 {
            return Err(Error::invalid("t must be positive"));
        }
        if self.m_self_x > self.n_x || self.m_self_y > self.n_y {
            return Err(Error::invalid(format!(
                "self-signal counts ({}, {}) exceed dimensions ({}, {})",
                self.m_self_x, self.m_self_y, self.n_x, self.n_y
            )));
        }
        if self.m_shared > self.n_x.min(self.n_y) {
            return Err(Error::invalid(format!(
                "m_shared = {} exceeds min(n_x, n_y) = {}",
                self.m_shared,
                self.n_x.min(self.n_y)
            )));
        }
        let variances = [
            ("var_r_x", self.var_r_x),
            ("var_r_y", self.var_r_y),
            ("var_u_x", self.var_u_x),
            ("var_u_y", self.var_u_y),
            ("var_p", self.var_p),
            ("var_v_x", self.var_v_x),
            ("var_v_y", self.var_v_y),
            ("var_q_x", self.var_q_x),
            ("var_q_y", self.var_q_y),
        ];
        for (name, v) in variances {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        if self.var_r_x <= 0.0 || self.var_r_y <= 0.0 {
            return Err(Error::invalid("noise variances must be strictly positive"));
        }
        Ok(())
    }

    /// Expected pre-standardization column variance of `X̃` and `Ỹ`.
    pub fn total_variance(&self) -> (f64, f64) {
        let x = self.var_r_x
            + self.m_self_x as f64 * self.var_u_x * self.var_v_x
            + self.m_shared as f64 * self.var_p * self.var_q_x;
        let y = self.var_r_y
            + self.m_self_y as f64 * self.var_u_y * self.var_v_y
            + self.m_shared as f64 * self.var_p * self.var_q_y;
        (x, y)
    }
}

pub fn snr(params: &ModelParams) -> Snr {
    Snr {
        gamma_self_x: params.var_u_x * params.var_v_x / params.var_r_x,
        gamma_self_y: params.var_u_y * params.var_v_y / params.var_r_y,
        gamma_shared_x: params.var_p * params.var_q_x / params.var_r_x,
        gamma_shared_y: params.var_p * params.var_q_y / params.var_r_y,
    }
}

/// Set `var_u_x`, `var_u_y` and `var_p` so that both modalities get the
/// requested self and shared SNR; the projection and noise variances of
/// `base` are kept.
pub fn params_from_snr(base: &ModelParams, gamma_self: f64, gamma_shared: f64) -> Result<ModelParams> {
    if !(gamma_self >= 0.0 && gamma_self.is_finite() && gamma_shared >= 0.0 && gamma_shared.is_finite()) {
        return Err(Error::invalid(format!(
            "SNRs must be finite and non-negative, got ({gamma_self}, {gamma_shared})"
        )));
    }
    let var_u = |gamma: f64, var_r: f64, var_v: f64, name: &str| -> Result<f64> {
        if gamma == 0.0 {
            Ok(0.0)
        } else if var_v > 0.0 {
            Ok(gamma * var_r / var_v)
        } else {
            Err(Error::invalid(format!("{name} = 0 cannot carry a non-zero self SNR")))
        }
    };
    let mut p = base.clone();
    p.var_u_x = var_u(gamma_self, base.var_r_x, base.var_v_x, "var_v_x")?;
    p.var_u_y = var_u(gamma_self, base.var_r_y, base.var_v_y, "var_v_y")?;
    p.var_p = if gamma_shared == 0.0 {
        0.0
    } else {
        if base.var_q_x <= 0.0 || base.var_q_y <= 0.0 {
            return Err(Error::invalid("var_q = 0 cannot carry a non-zero shared SNR"));
        }
        let px = gamma_shared * base.var_r_x / base.var_q_x;
        let py = gamma_shared * base.var_r_y / base.var_q_y;
        if (px - py).abs() > 1e-12 * px.abs().max(py.abs()) {
            return Err(Error::invalid(
                "var_r/var_q differs between modalities; a single var_p cannot give both the same shared SNR",
            ));
        }
        px
    };
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn snr_of_unit_variances() {
        let s = snr(&unit());
        assert_eq!(s.gamma_self_x, 1.0);
        assert_eq!(s.gamma_shared_y, 1.0);
    }

    #[test]
    fn snr_at_grid_endpoint() {
        let mut p = unit();
        p.var_p = 0.05;
        assert_eq!(snr(&p).gamma_shared_x, 0.05);
    }

    #[test]
    fn zero_self_variance_gives_zero_snr() {
        let mut p = unit();
        p.m_self_x = 0;
        p.var_u_x = 0.0;
        assert_eq!(snr(&p).gamma_self_x, 0.0);
    }

    #[test]
    fn inversion_cases() {
        let p = params_from_snr(&unit(), 1.0, 0.0).unwrap();
        assert_eq!(p.var_u_x, 1.0);
        assert_eq!(p.var_p, 0.0);
    }

    #[test]
    fn round_trip() {
        let s = snr(&params_from_snr(&unit(), 0.3, 0.7).unwrap());
        assert_eq!(
            (s.gamma_self_x, s.gamma_self_y, s.gamma_shared_x, s.gamma_shared_y),
            (0.3, 0.3, 0.7, 0.7)
        );
    }

    #[test]
    fn asymmetric_noise_rejected_for_shared_snr() {
        let mut b = unit();
        b.var_r_y = 2.0;
        assert!(params_from_snr(&b, 0.5, 0.5).is_err());
    }

    #[test]
    fn validation() {
        assert!(unit().validate().is_ok());
        let mut p = unit();
        p.var_r_x = 0.0;
        assert!(p.validate().is_err());
        let mut p = unit();
        p.m_shared = 201;
        assert!(p.validate().is_err());
        let mut p = unit();
        p.var_p = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn total_variance_of_unit_model() {
        let (x, y) = unit().total_variance();
        assert_eq!((x, y), (3.0, 3.0));
    }
}
