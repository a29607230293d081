use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{HyperParams, IntrinsicKind};
use crate::causal::AugmentationConfig;
use crate::envsim::EnvConfig;
use crate::{Error, Result};

/// Name of the environment variable that shifts every seed of a run.
pub const SEED_OFFSET_VAR: &str = "IMRL_SEED_OFFSET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    pub no_empowerment: bool,
    pub no_augmentation: bool,
    pub kl_intrinsic: bool,
}

/// The four compared agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "IMRL")]
    Imrl,
    #[serde(rename = "IMRL-E")]
    ImrlE,
    #[serde(rename = "IMRL-A")]
    ImrlA,
    #[serde(rename = "IMRL-KL")]
    ImrlKl,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Imrl, Variant::ImrlE, Variant::ImrlA, Variant::ImrlKl];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Imrl => "IMRL",
            Variant::ImrlE => "IMRL-E",
            Variant::ImrlA => "IMRL-A",
            Variant::ImrlKl => "IMRL-KL",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.label() == s)
    }

    pub fn flags(self) -> AblationFlags {
        match self {
            Variant::Imrl => AblationFlags::default(),
            Variant::ImrlE => AblationFlags {
                no_empowerment: true,
                ..Default::default()
            },
            Variant::ImrlA => AblationFlags {
                no_augmentation: true,
                ..Default::default()
            },
            Variant::ImrlKl => AblationFlags {
                kl_intrinsic: true,
                ..Default::default()
            },
        }
    }

    /// Closest named variant; flag combinations outside the four (such as no
    /// empowerment and no augmentation together) map to the first matching
    /// ablation.
    pub fn from_flags(f: AblationFlags) -> Self {
        if f.no_empowerment {
            Variant::ImrlE
        } else if f.kl_intrinsic {
            Variant::ImrlKl
        } else if f.no_augmentation {
            Variant::ImrlA
        } else {
            Variant::Imrl
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub agent: HyperParams,
    pub augmentation: AugmentationConfig,
    pub ablation: AblationFlags,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    /// Evaluate the deterministic policy every this many training episodes.
    pub eval_every: usize,
    /// Episodes per evaluation.
    pub eval_episodes: usize,
    /// Checkpoint interval in episodes; a final checkpoint is always written.
    pub checkpoint_every: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            agent: HyperParams::default(),
            augmentation: AugmentationConfig::default(),
            ablation: AblationFlags::default(),
            seeds: vec![0],
            episodes: 2000,
            eval_every: 10,
            eval_episodes: 5,
            checkpoint_every: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ablation.kl_intrinsic && self.ablation.no_empowerment {
            return Err(Error::invalid("kl_intrinsic and no_empowerment are mutually exclusive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 || self.checkpoint_every == 0 {
            return Err(Error::invalid("eval_every, eval_episodes and checkpoint_every must be positive"));
        }
        self.env.validate()?;
        self.agent.validate()?;
        self.augmentation.validate()
    }

    pub fn variant(&self) -> Variant {
        Variant::from_flags(self.ablation)
    }

    /// Copy configured as the given variant.
    pub fn for_variant(&self, v: Variant) -> Self {
        Self {
            ablation: v.flags(),
            ..self.clone()
        }
    }

    /// Agent hyperparameters after applying the ablation flags.
    pub fn resolved_agent(&self) -> HyperParams {
        let mut hp = self.agent.clone();
        if self.ablation.no_empowerment {
            hp.beta = 0.0;
        }
        if self.ablation.kl_intrinsic {
            hp.intrinsic = IntrinsicKind::Kl;
        }
        hp
    }

    pub fn with_seed_offset(mut self, offset: u64) -> Self {
        for s in self.seeds.iter_mut() {
            *s = s.wrapping_add(offset);
        }
        self
    }
}

/// Reads the seed offset from the environment; unset means zero.
pub fn seed_offset_from_env() -> Result<u64> {
    match std::env::var(SEED_OFFSET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{SEED_OFFSET_VAR} must be a non-negative integer, got {v:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Error::invalid(format!("{SEED_OFFSET_VAR}: {e}"))),
    }
}
