use crate::causal::{adaptive_threshold, AugmentationConfig, Transition};
use crate::Result;

use super::ReplayBuffer;

/// A state the agent can consume as a flat real vector of fixed length.
pub trait Observation: Clone {
    fn encoded_dim(&self) -> usize;

    fn encode_into(&self, out: &mut Vec<f64>);

    fn encode(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.encoded_dim());
        self.encode_into(&mut v);
        v
    }
}

impl Observation for Vec<f64> {
    fn encoded_dim(&self) -> usize {
        self.len()
    }

    fn encode_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep<S> {
    pub next_state: S,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment {
    type State: Observation;

    fn observation_dim(&self) -> usize;

    fn action_dim(&self) -> usize;

    fn reset_env(&mut self) -> Self::State;

    fn step_env(&mut self, state: &Self::State, action: &[f64]) -> Result<EnvStep<Self::State>>;
}

/// Hook run after every stored interaction.
pub trait Augment<S> {
    /// Appends generated transitions for `new` (already stored as the newest
    /// entry) and returns how many were added.
    fn augment(
        &mut self,
        buffer: &mut ReplayBuffer<S>,
        new: &Transition<S>,
        threshold: f64,
        episode: usize,
    ) -> Result<usize>;

    fn threshold(&self, episode: usize) -> f64;
}

/// Never augments; still reports the threshold schedule it was given.
#[derive(Debug, Clone, Default)]
pub struct NoAugmentation {
    pub schedule: AugmentationConfig,
}

impl<S> Augment<S> for NoAugmentation {
    fn augment(&mut self, _: &mut ReplayBuffer<S>, _: &Transition<S>, _: f64, _: usize) -> Result<usize> {
        Ok(0)
    }

    fn threshold(&self, episode: usize) -> f64 {
        adaptive_threshold(episode, &self.schedule)
    }
}
