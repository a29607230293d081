use serde::{Deserialize, Serialize};

use super::{ActMode, Agent, Augment, Batch, Environment, LossReport, Observation, ReplayBuffer};
use crate::causal::Transition;
use crate::rng::StreamRng;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub episode: usize,
    pub steps: usize,
    pub episode_return: f64,
    /// Fraction of steps with positive reward.
    pub ctr: f64,
    pub threshold: f64,
    pub augmented: usize,
    pub buffer_size: usize,
    pub updates: usize,
    /// Means over the episode's gradient steps (zeros before warm-up ends).
    pub losses: LossReport,
}

/// Agent, replay buffer and the policy random stream of one training run.
#[derive(Debug, Clone)]
pub struct Trainer<S> {
    pub agent: Agent,
    pub buffer: ReplayBuffer<S>,
    pub rng: StreamRng,
    pub total_steps: usize,
}

impl<S: Observation> Trainer<S> {
    pub fn new(agent: Agent, rng: StreamRng) -> Self {
        let capacity = agent.hyper_params().buffer_capacity;
        Self {
            agent,
            buffer: ReplayBuffer::new(capacity),
            rng,
            total_steps: 0,
        }
    }

    fn ready(&self) -> bool {
        let hp = self.agent.hyper_params();
        self.buffer.len() >= hp.batch_size.max(hp.warmup_steps)
    }

    /// One gradient step on a uniformly sampled minibatch.
    pub fn gradient_step(&mut self) -> Result<LossReport> {
        let n = self.agent.hyper_params().batch_size;
        let idx = self.buffer.sample_indices(n, &mut self.rng);
        let picked: Vec<&Transition<S>> = idx.iter().map(|&i| self.buffer.get(i)).collect();
        let batch = Batch::from_transitions(&picked);
        self.agent.update(&batch, &mut self.rng)
    }

    /// Runs one episode: act, step, store, augment, then one gradient step
    /// per environment step once the buffer holds a full batch.
    pub fn train_episode<E>(
        &mut self,
        env: &mut E,
        augmenter: &mut dyn Augment<S>,
        episode: usize,
    ) -> Result<EpisodeReport>
    where
        E: Environment<State = S>,
    {
        let mut s = env.reset_env();
        let mut steps = 0;
        let mut ret = 0.0;
        let mut hits = 0usize;
        let mut augmented = 0;
        let mut updates = 0;
        let mut sums = LossReport::default();
        let threshold = augmenter.threshold(episode);
        loop {
            let a = self.agent.act(&s.encode(), ActMode::Explore, &mut self.rng)?;
            let out = env.step_env(&s, &a)?;
            let t = Transition {
                s,
                a,
                r: out.reward,
                s_next: out.next_state.clone(),
                done: out.done,
            };
            steps += 1;
            ret += out.reward;
            if out.reward > 0.0 {
                hits += 1;
            }
            self.buffer.push(t.clone());
            augmented += augmenter.augment(&mut self.buffer, &t, threshold, episode)?;
            if self.ready() {
                sums.add(&self.gradient_step()?);
                updates += 1;
            }
            s = out.next_state;
            if out.done {
                break;
            }
        }
        self.total_steps += steps;
        Ok(EpisodeReport {
            episode,
            steps,
            episode_return: ret,
            ctr: hits as f64 / steps as f64,
            threshold,
            augmented,
            buffer_size: self.buffer.len(),
            updates,
            losses: if updates > 0 {
                sums.scaled(1.0 / updates as f64)
            } else {
                LossReport {
                    alpha: self.agent.temperature(),
                    ..Default::default()
                }
            },
        })
    }

    /// Deterministic-policy episode. Returns `(total reward, positive-reward
    /// steps, steps)`.
    pub fn evaluate_episode<E>(&self, env: &mut E) -> Result<(f64, usize, usize)>
    where
        E: Environment<State = S>,
    {
        let mut s = env.reset_env();
        let (mut ret, mut hits, mut steps) = (0.0, 0, 0);
        // Exploit mode draws nothing from this stream.
        let mut unused = self.rng.clone();
        loop {
            let a = self.agent.act(&s.encode(), ActMode::Exploit, &mut unused)?;
            let out = env.step_env(&s, &a)?;
            ret += out.reward;
            hits += usize::from(out.reward > 0.0);
            steps += 1;
            s = out.next_state;
            if out.done {
                return Ok((ret, hits, steps));
            }
        }
    }
}
