//! Soft actor-critic for simulated recommendation with an empowerment-based
//! intrinsic reward and counterfactual replay-buffer augmentation driven by
//! local causal structure.
//!
//! Module map:
//!
//! * [`approximator`]: dense networks with exact reverse-mode gradients, Adam,
//!   and the tanh-squashed Gaussian policy head.
//! * [`envsim`]: factored-state recommendation simulator, its ground-truth
//!   causal mask and mechanism checker, and small discrete MDPs.
//! * [`causal`]: connected components, independence detection, counterfactual
//!   swaps and the adaptive informativeness threshold.
//! * [`agent`]: replay buffer, the five-network agent, its losses and the
//!   episode training loop.
//! * [`empowerment`]: exact one-step empowerment (Blahut-Arimoto) and rank
//!   correlation against the learned intrinsic signal.
//! * [`harness`]: experiment configuration, training/ablation/validation
//!   runners, metrics CSV and SVG plots.

pub mod agent;
pub mod approximator;
pub mod causal;
pub mod empowerment;
pub mod envsim;
mod error;
pub mod harness;
pub mod rng;

pub use error::{Error, Result};

pub use agent::{Agent, HyperParams, IntrinsicKind, LossReport, ReplayBuffer};
pub use approximator::{Activation, Adam, DenseNet, SquashedGaussianHead};
pub use causal::{AdjacencyMatrix, AugmentationConfig, Detector, IndependentSet, Transition};
pub use empowerment::{blahut_arimoto, Channel, EmpowermentResult};
pub use envsim::{EnvConfig, FactoredState, ItemCatalog, RecEnv, StepOutcome};
