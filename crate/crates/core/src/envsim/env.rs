use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dot, normalize, EnvConfig, FactoredState, InterestMode, Item, ItemCatalog, Slot};
use crate::agent::{EnvStep, Environment};
use crate::causal::{AdjacencyMatrix, Transition};
use crate::rng::{standard_normals, stream, Stream, StreamRng};
use crate::Result;

/// Hidden user state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub static_interest: Vec<f64>,
    pub dynamic_interest: Vec<f64>,
    pub demographic: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub item_id: usize,
    pub category: usize,
    pub true_click_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: FactoredState,
    /// 1 on click, 0 otherwise.
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The deterministic part of the simulator: catalog, demographic projection
/// and the rules that map `(state, action, click)` to the next state. Shared
/// read-only between an environment and anything that reasons about its
/// causal structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    config: EnvConfig,
    catalog: ItemCatalog,
    /// `demo_dim x item_dim`, row-major.
    demo_projection: Vec<f64>,
}

impl Mechanism {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream(config.seed, Stream::Init);
        let catalog = ItemCatalog::generate(
            config.num_items,
            config.categories,
            config.item_dim,
            config.item_spread,
            &mut rng,
        )?;
        let scale = 1.0 / (config.item_dim as f64).sqrt();
        let demo_projection = standard_normals(&mut rng, config.demo_dim * config.item_dim)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        Ok(Self {
            config,
            catalog,
            demo_projection,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn catalog(&self) -> &ItemCatalog {
        &self.catalog
    }

    pub fn check_state(&self, s: &FactoredState) -> Result<()> {
        s.check_schema(self.config.categories, self.config.item_dim, self.config.demo_dim)
    }

    pub fn boredom(&self, recency: u32) -> f64 {
        self.config.boredom_scale * (-(recency as f64) / self.config.boredom_decay).exp()
    }

    fn demographic_affinity(&self, demographic: &[f64], item: &Item) -> f64 {
        let d_i = self.config.item_dim;
        demographic
            .iter()
            .zip(self.demo_projection.chunks_exact(d_i))
            .map(|(g, row)| g * dot(row, &item.features))
            .sum()
    }

    /// Click probability of `item` for a user with the given dynamic interest.
    /// Reads only the demographic and the slot of the item's category.
    pub fn click_prob(&self, dynamic_interest: &[f64], state: &FactoredState, item: &Item) -> f64 {
        let c = &self.config;
        let affinity = dot(dynamic_interest, &item.features)
            + c.demo_weight * self.demographic_affinity(&state.demographic, item)
            - self.boredom(state.slots[item.category].recency);
        logistic(c.kappa * affinity + c.base_offset)
    }

    /// Slot `c*` takes the shown item and its feedback; every other slot ages by one step.
    pub fn next_slots(&self, state: &FactoredState, item: &Item, click: bool) -> Vec<Slot> {
        state
            .slots
            .iter()
            .enumerate()
            .map(|(c, slot)| {
                if c == item.category {
                    Slot {
                        features: item.features.clone(),
                        feedback: click,
                        recency: 0,
                    }
                } else {
                    slot.aged()
                }
            })
            .collect()
    }

    /// Interest after an interaction (drift toward clicked items).
    pub fn drift_interest(&self, interest: &[f64], item: &Item, click: bool) -> Vec<f64> {
        if !click || self.config.mode == InterestMode::StaticPref {
            return interest.to_vec();
        }
        let eta = self.config.drift;
        let mut next: Vec<f64> = interest
            .iter()
            .zip(&item.features)
            .map(|(u, f)| (1.0 - eta) * u + eta * f)
            .collect();
        normalize(&mut next);
        next
    }

    /// Local causal graph of one step over the nodes
    /// `[slot_0 .. slot_{C-1}, demographic, interest_obs, action]`.
    pub fn ground_truth_mask(&self, state: &FactoredState, action: &[f64]) -> Result<AdjacencyMatrix> {
        self.check_state(state)?;
        let item = self.catalog.nearest(action)?;
        let c = self.config.categories;
        let action_node = c + 2;
        let mut m = AdjacencyMatrix::new(c + 3);
        m.add_edge(action_node, item.category);
        m.add_edge(action_node, c);
        m.add_edge(action_node, c + 1);
        Ok(m)
    }

    /// True when every deterministic part of `t` is what this mechanism
    /// produces from `(t.s, t.a)` with the recorded feedback.
    pub fn counterfactual_check(&self, t: &Transition<FactoredState>) -> Result<bool> {
        self.check_state(&t.s)?;
        self.check_state(&t.s_next)?;
        let item = self.catalog.nearest(&t.a)?;
        let click = match t.r {
            r if r == 1.0 => true,
            r if r == 0.0 => false,
            _ => return Ok(false),
        };
        if t.s_next.demographic != t.s.demographic {
            return Ok(false);
        }
        Ok(self.next_slots(&t.s, item, click) == t.s_next.slots)
    }
}

/// Recommendation environment: a [`Mechanism`] plus the hidden user and the
/// environment's own random stream.
#[derive(Debug, Clone)]
pub struct RecEnv {
    mechanism: Arc<Mechanism>,
    rng: StreamRng,
    user: UserProfile,
    t: usize,
}

impl RecEnv {
    /// Environment whose random stream is seeded from `config.seed`.
    pub fn new(config: EnvConfig) -> Result<Self> {
        let seed = config.seed;
        Self::with_rng(config, stream(seed, Stream::Env))
    }

    pub fn with_rng(config: EnvConfig, rng: StreamRng) -> Result<Self> {
        let mechanism = Arc::new(Mechanism::new(config)?);
        Ok(Self::from_mechanism(mechanism, rng))
    }

    pub fn from_mechanism(mechanism: Arc<Mechanism>, rng: StreamRng) -> Self {
        let c = mechanism.config();
        let user = UserProfile {
            static_interest: vec![0.0; c.item_dim],
            dynamic_interest: vec![0.0; c.item_dim],
            demographic: vec![0.0; c.demo_dim],
        };
        Self {
            mechanism,
            rng,
            user,
            t: 0,
        }
    }

    pub fn mechanism(&self) -> &Arc<Mechanism> {
        &self.mechanism
    }

    pub fn config(&self) -> &EnvConfig {
        self.mechanism.config()
    }

    pub fn user(&self) -> &UserProfile {
        &self.user
    }

    pub fn rng(&self) -> &StreamRng {
        &self.rng
    }

    pub fn set_rng(&mut self, rng: StreamRng) {
        self.rng = rng;
    }

    fn observe_interest(&mut self) -> Vec<f64> {
        let sd = self.config().obs_noise;
        let noise = standard_normals(&mut self.rng, self.user.dynamic_interest.len());
        self.user
            .dynamic_interest
            .iter()
            .zip(noise)
            .map(|(u, n)| u + sd * n)
            .collect()
    }

    /// Draws a fresh user and returns the initial state with empty slots.
    pub fn reset(&mut self) -> FactoredState {
        let c = self.mechanism.config().clone();
        let mut interest = standard_normals(&mut self.rng, c.item_dim);
        normalize(&mut interest);
        let demographic = standard_normals(&mut self.rng, c.demo_dim);
        self.user = UserProfile {
            static_interest: interest.clone(),
            dynamic_interest: interest,
            demographic: demographic.clone(),
        };
        self.t = 0;
        FactoredState {
            slots: vec![Slot::empty(c.item_dim); c.categories],
            demographic,
            interest_obs: self.observe_interest(),
        }
    }

    /// Reseeds the environment stream, then resets.
    pub fn reset_with_seed(&mut self, seed: u64) -> FactoredState {
        self.rng = stream(seed, Stream::Env);
        self.reset()
    }

    pub fn true_click_prob(&self, state: &FactoredState, action: &[f64]) -> Result<f64> {
        self.mechanism.check_state(state)?;
        let item = self.mechanism.catalog().nearest(action)?;
        Ok(self.mechanism.click_prob(&self.user.dynamic_interest, state, item))
    }

    pub fn step(&mut self, state: &FactoredState, action: &[f64]) -> Result<StepOutcome> {
        let mech = Arc::clone(&self.mechanism);
        mech.check_state(state)?;
        let item = mech.catalog().nearest(action)?;
        let p = mech.click_prob(&self.user.dynamic_interest, state, item);
        let click = self.rng.random::<f64>() < p;
        let slots = mech.next_slots(state, item, click);
        self.user.dynamic_interest = mech.drift_interest(&self.user.dynamic_interest, item, click);
        let interest_obs = self.observe_interest();
        self.t += 1;
        Ok(StepOutcome {
            next_state: FactoredState {
                slots,
                demographic: state.demographic.clone(),
                interest_obs,
            },
            reward: if click { 1.0 } else { 0.0 },
            done: self.t >= mech.config().episode_length,
            info: StepInfo {
                item_id: item.id,
                category: item.category,
                true_click_prob: p,
            },
        })
    }

    pub fn ground_truth_mask(&self, state: &FactoredState, action: &[f64]) -> Result<AdjacencyMatrix> {
        self.mechanism.ground_truth_mask(state, action)
    }

    pub fn counterfactual_check(&self, t: &Transition<FactoredState>) -> Result<bool> {
        self.mechanism.counterfactual_check(t)
    }
}

impl Environment for RecEnv {
    type State = FactoredState;

    fn action_dim(&self) -> usize {
        self.config().item_dim
    }

    fn observation_dim(&self) -> usize {
        let c = self.config();
        c.categories * (c.item_dim + 2) + c.demo_dim + c.item_dim
    }

    fn reset_env(&mut self) -> FactoredState {
        self.reset()
    }

    fn step_env(&mut self, state: &FactoredState, action: &[f64]) -> Result<EnvStep<FactoredState>> {
        let out = self.step(state, action)?;
        Ok(EnvStep {
            next_state: out.next_state,
            reward: out.reward,
            done: out.done,
        })
    }
}
