use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Pls,
    Cca,
    Rcca,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pca, Method::Pls, Method::Cca, Method::Rcca];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Pls => "pls",
            Method::Cca => "cca",
            Method::Rcca => "rcca",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Pca => "PCA",
            Method::Pls => "PLS",
            Method::Cca => "CCA",
            Method::Rcca => "rCCA",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(Method::Pca),
            "pls" => Ok(Method::Pls),
            "cca" => Ok(Method::Cca),
            "rcca" => Ok(Method::Rcca),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_REGULARIZATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub method: Method,
    /// Retained dimensions per modality.
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_reg")]
    pub c_x: f64,
    #[serde(default = "default_reg")]
    pub c_y: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_reg() -> f64 {
    DEFAULT_REGULARIZATION
}

impl FitConfig {
    pub fn new(method: Method, k: usize) -> Self {
        FitConfig {
            method,
            k,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            c_x: DEFAULT_REGULARIZATION,
            c_y: DEFAULT_REGULARIZATION,
        }
    }

    pub fn with_regularization(mut self, c_x: f64, c_y: f64) -> Self {
        self.c_x = c_x;
        self.c_y = c_y;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self, n_x: usize, n_y: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if self.k > n_x.min(n_y) {
            return Err(Error::invalid(format!("k = {} exceeds min(n_x, n_y) = {}", self.k, n_x.min(n_y))));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        for (name, c) in [("c_x", self.c_x), ("c_y", self.c_y)] {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::invalid(format!("{name} = {c} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}
