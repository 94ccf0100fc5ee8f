use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::DensityMode;

/// Segmentation parameters. Defaults follow the reference settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Color spread for the edge truth measure.
    pub delta_t: f64,
    /// Spread of the background-similarity test.
    pub delta_b: f64,
    /// Spread mapping mean indeterminacy to γ.
    pub delta_gamma: f64,
    /// Background-similarity threshold, in (0, 1).
    pub epsilon: f64,
    pub k_gmm: usize,
    pub eta: f64,
    /// Spread of the parent-edge weights.
    pub delta_nc: f64,
    pub n_regions: usize,
    pub max_iterations: usize,
    pub t_clamp: f64,
    /// When false, every indeterminacy is zero (and so γ = 1).
    pub indeterminacy_enabled: bool,
    pub density_mode: DensityMode,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            delta_t: 30.0,
            delta_b: 50.0,
            delta_gamma: 0.025,
            epsilon: 0.5,
            k_gmm: 5,
            eta: 50.0,
            delta_nc: 0.1,
            n_regions: 500,
            max_iterations: 10,
            t_clamp: 1e-6,
            indeterminacy_enabled: true,
            density_mode: DensityMode::Rescale,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta_t", self.delta_t),
            ("delta_b", self.delta_b),
            ("delta_gamma", self.delta_gamma),
            ("eta", self.eta),
            ("delta_nc", self.delta_nc),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        if !(self.t_clamp > 0.0 && self.t_clamp < 0.5) {
            return Err(Error::Config(format!("t_clamp must be in (0, 0.5), got {}", self.t_clamp)));
        }
        for (name, v) in [
            ("k_gmm", self.k_gmm),
            ("n_regions", self.n_regions),
            ("max_iterations", self.max_iterations),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
        }
        match key.trim() {
            "delta_t" => self.delta_t = num(key, value)?,
            "delta_b" => self.delta_b = num(key, value)?,
            "delta_gamma" => self.delta_gamma = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "k_gmm" => self.k_gmm = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "delta_nc" => self.delta_nc = num(key, value)?,
            "n_regions" => self.n_regions = num(key, value)?,
            "max_iterations" => self.max_iterations = num(key, value)?,
            "t_clamp" => self.t_clamp = num(key, value)?,
            "indeterminacy_enabled" => self.indeterminacy_enabled = num(key, value)?,
            "density_mode" => {
                self.density_mode = match value.trim() {
                    "rescale" => DensityMode::Rescale,
                    "literal" => DensityMode::Literal,
                    other => return Err(Error::Config(format!("unknown density mode {other:?}"))),
                }
            }
            other => return Err(Error::Config(format!("unknown parameter {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key=value` pairs separated by newlines or commas; `#` starts a comment.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for item in text.lines().flat_map(|l| l.split('#').next().unwrap_or("").split(',')) {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {item:?}")))?;
            self.set(k, v)?;
        }
        self.validate()
    }
}
