use serde::{Deserialize, Serialize};

use super::Detector;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    /// Threshold numerator.
    pub sigma: f64,
    /// Initial decay variable, in `(0, 1]`.
    pub lambda_init: f64,
    /// Per-episode multiplicative decay of the decay variable, in `(0, 1)`.
    pub decay: f64,
    /// Largest per-step reward of the environment.
    pub t_max: f64,
    pub pairs_per_trigger: usize,
    pub detector: Detector,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            lambda_init: 1.0,
            decay: 0.999,
            t_max: 1.0,
            pairs_per_trigger: 4,
            detector: Detector::Oracle,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::invalid("augmentation: sigma and t_max must be positive"));
        }
        if !(self.lambda_init > 0.0 && self.lambda_init <= 1.0) {
            return Err(Error::invalid("augmentation: lambda_init must lie in (0, 1]"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::invalid("augmentation: decay must lie in (0, 1)"));
        }
        if self.pairs_per_trigger == 0 {
            return Err(Error::invalid("augmentation: pairs_per_trigger must be positive"));
        }
        Ok(())
    }

    /// Decay variable at `episode`, floored at `sigma / t_max`.
    pub fn lambda_d(&self, episode: usize) -> f64 {
        let floor = self.sigma / self.t_max;
        let exponent = i32::try_from(episode).unwrap_or(i32::MAX);
        (self.lambda_init * self.decay.powi(exponent)).max(floor)
    }
}

/// Informativeness threshold `T = min(sigma / lambda_d(episode), t_max)`.
pub fn adaptive_threshold(episode: usize, cfg: &AugmentationConfig) -> f64 {
    (cfg.sigma / cfg.lambda_d(episode)).min(cfg.t_max)
}
