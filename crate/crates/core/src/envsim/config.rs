use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InterestMode {
    /// Dynamic interest drifts toward every clicked item.
    #[default]
    InterestEvolution,
    /// Dynamic interest stays equal to the static interest.
    StaticPref,
}

/// Simulator configuration. Every field has a desk-scale default, so a JSON
/// document only needs to list what it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Number of item categories (one state slot each).
    pub categories: usize,
    pub item_dim: usize,
    pub demo_dim: usize,
    pub num_items: usize,
    pub episode_length: usize,
    /// Gain on the user-item affinity inside the click logistic.
    pub kappa: f64,
    /// Offset added after the gain; negative values make clicks sparse.
    pub base_offset: f64,
    /// Interest drift rate toward clicked items, in `[0, 1]`.
    pub drift: f64,
    pub obs_noise: f64,
    pub demo_weight: f64,
    pub boredom_scale: f64,
    pub boredom_decay: f64,
    /// Spread of item features around their category centroid.
    pub item_spread: f64,
    pub mode: InterestMode,
    /// Largest reward obtainable in one step.
    pub t_max: f64,
    /// Seeds the item catalog and the demographic projection.
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            categories: 8,
            item_dim: 8,
            demo_dim: 4,
            num_items: 64,
            episode_length: 50,
            kappa: 3.0,
            base_offset: -1.0,
            drift: 0.1,
            obs_noise: 0.1,
            demo_weight: 0.3,
            boredom_scale: 0.5,
            boredom_decay: 5.0,
            item_spread: 0.3,
            mode: InterestMode::InterestEvolution,
            t_max: 1.0,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("env config: {m}")));
        if self.categories == 0 || self.item_dim == 0 || self.demo_dim == 0 {
            return fail("categories and dimensions must be positive");
        }
        if self.num_items < self.categories {
            return fail("every category needs at least one item");
        }
        if self.episode_length == 0 {
            return fail("episode_length must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.drift) {
            return fail("drift must lie in [0, 1]");
        }
        if self.obs_noise < 0.0 || self.boredom_decay <= 0.0 || self.item_spread < 0.0 {
            return fail("noise, spread and boredom decay must be non-negative (decay positive)");
        }
        if self.t_max != 1.0 {
            return fail("clicks are binary, so t_max must be 1");
        }
        let finite = [
            self.kappa,
            self.base_offset,
            self.demo_weight,
            self.boredom_scale,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("coefficients must be finite");
        }
        Ok(())
    }

    /// Number of factored state components: one per category plus the
    /// demographic and interest observation.
    pub fn num_components(&self) -> usize {
        self.categories + 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: EnvConfig = serde_json::from_str(r#"{"categories": 3, "base_offset": -3.0}"#).unwrap();
        assert_eq!(cfg.categories, 3);
        assert_eq!(cfg.base_offset, -3.0);
        assert_eq!(cfg.item_dim, EnvConfig::default().item_dim);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(serde_json::from_str::<EnvConfig>(r#"{"categoriez": 3}"#).is_err());
        let cfg = EnvConfig {
            episode_length: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EnvConfig {
            t_max: 2.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
