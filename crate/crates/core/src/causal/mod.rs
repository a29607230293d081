//! Local causal structure of a transition and the counterfactual replay
//! augmentation built on it.

mod augment;
mod detect;
mod graph;
mod threshold;

pub use augment::{augment_buffer, counterfactual_swap, AuditEntry, Augmenter, Transition};
pub use detect::{independent_components, Detector, IndependentSet};
pub use graph::{connected_components, AdjacencyMatrix, UnionFind};
pub use threshold::{adaptive_threshold, AugmentationConfig};
