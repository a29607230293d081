//! Soft actor-critic with a value network, extended with an
//! inverse-dynamics model whose log-likelihood ratio against the policy is
//! used as an intrinsic (empowerment) term in the value target and the
//! policy objective.

mod buffer;
mod checkpoint;
mod env;
mod hyper;
mod losses;
mod nets;
mod trainer;

pub use buffer::ReplayBuffer;
pub use checkpoint::{load_agent, save_agent, AGENT_FORMAT_VERSION};
pub use env::{Augment, EnvStep, Environment, NoAugmentation, Observation};
pub use hyper::{HyperParams, IntrinsicKind};
pub use losses::{Batch, LossReport};
pub use nets::{ActMode, Agent, NetRole};
pub use trainer::{EpisodeReport, Trainer};
