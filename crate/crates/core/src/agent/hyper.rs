use serde::{Deserialize, Serialize};

use crate::approximator::Activation;
use crate::{Error, Result};

/// What the intrinsic term in the value target and policy objective measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IntrinsicKind {
    /// `log p_xi(a | s, s') - log pi(a | s)`.
    #[default]
    Empowerment,
    /// `-KL(pi(.|s) || p_xi(.|s, s'))` between the pre-squash Gaussians.
    Kl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub gamma: f64,
    /// Shared Adam learning rate for every network and the temperature.
    pub lr: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub activation: Activation,
    /// Weight of the intrinsic term.
    pub beta: f64,
    /// Weight of the extrinsic reward in the Bellman target.
    pub reward_weight: f64,
    pub intrinsic: IntrinsicKind,
    pub init_temperature: f64,
    pub learn_temperature: bool,
    /// When false the temperature is treated as zero in the value target and
    /// the policy objective.
    pub entropy_bonus: bool,
    /// Defaults to minus the action dimension.
    pub target_entropy: Option<f64>,
    /// Rate of the exponential moving average that tracks the value network.
    pub polyak: f64,
    pub twin_q: bool,
    /// Environment steps stored before gradient updates begin; never less
    /// than the batch size.
    pub warmup_steps: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr: 3e-4,
            buffer_capacity: 1_000_000,
            batch_size: 256,
            hidden_width: 256,
            hidden_layers: 2,
            activation: Activation::Relu,
            beta: 0.05,
            reward_weight: 1.0,
            intrinsic: IntrinsicKind::Empowerment,
            init_temperature: 0.2,
            learn_temperature: true,
            entropy_bonus: true,
            target_entropy: None,
            polyak: 0.005,
            twin_q: false,
            warmup_steps: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("hyperparameters: {m}")));
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        if !(self.beta >= 0.0) {
            return fail("beta must be non-negative");
        }
        if !(self.lr > 0.0) || !(self.init_temperature > 0.0) {
            return fail("learning rate and initial temperature must be positive");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return fail("buffer capacity must be at least the (positive) batch size");
        }
        if self.hidden_width == 0 {
            return fail("hidden width must be positive");
        }
        if !(0.0..=1.0).contains(&self.polyak) {
            return fail("polyak rate must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat(self.hidden_width).take(self.hidden_layers));
        sizes.push(output);
        sizes
    }
}
