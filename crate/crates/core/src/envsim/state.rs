use serde::{Deserialize, Serialize};

use crate::agent::Observation;
use crate::{Error, Result};

/// Most recent interaction within one item category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    /// Features of the last item shown in this category; all zeros until the
    /// category is first recommended.
    pub features: Vec<f64>,
    pub feedback: bool,
    /// Steps since the slot was last written.
    pub recency: u32,
}

impl Slot {
    pub fn empty(dim: usize) -> Self {
        Self {
            features: vec![0.0; dim],
            feedback: false,
            recency: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.features.iter().all(|&f| f == 0.0)
    }

    /// The slot one step later when nothing touches it.
    pub fn aged(&self) -> Self {
        Self {
            features: self.features.clone(),
            feedback: self.feedback,
            recency: self.recency + 1,
        }
    }
}

/// `s = slot_0 ⊕ ... ⊕ slot_{C-1} ⊕ demographic ⊕ interest_obs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredState {
    pub slots: Vec<Slot>,
    pub demographic: Vec<f64>,
    pub interest_obs: Vec<f64>,
}

impl FactoredState {
    pub fn num_components(&self) -> usize {
        self.slots.len() + 2
    }

    pub fn demographic_index(&self) -> usize {
        self.slots.len()
    }

    pub fn interest_index(&self) -> usize {
        self.slots.len() + 1
    }

    pub fn item_dim(&self) -> usize {
        self.interest_obs.len()
    }

    pub fn same_schema(&self, other: &FactoredState) -> bool {
        self.slots.len() == other.slots.len()
            && self.demographic.len() == other.demographic.len()
            && self.interest_obs.len() == other.interest_obs.len()
            && self
                .slots
                .iter()
                .zip(&other.slots)
                .all(|(a, b)| a.features.len() == b.features.len())
    }

    pub fn check_schema(&self, categories: usize, item_dim: usize, demo_dim: usize) -> Result<()> {
        let ok = self.slots.len() == categories
            && self.interest_obs.len() == item_dim
            && self.demographic.len() == demo_dim
            && self.slots.iter().all(|s| s.features.len() == item_dim);
        if ok {
            Ok(())
        } else {
            Err(Error::Schema(format!(
                "state has {} slots / interest dim {} / demographic dim {}, environment expects {categories} / {item_dim} / {demo_dim}",
                self.slots.len(),
                self.interest_obs.len(),
                self.demographic.len()
            )))
        }
    }
}

impl Observation for FactoredState {
    fn encoded_dim(&self) -> usize {
        self.slots.iter().map(|s| s.features.len() + 2).sum::<usize>()
            + self.demographic.len()
            + self.interest_obs.len()
    }

    /// Slot features, feedback and `1 / (1 + recency)` per slot, then the
    /// demographic and interest observation.
    fn encode_into(&self, out: &mut Vec<f64>) {
        for s in &self.slots {
            out.extend_from_slice(&s.features);
            out.push(if s.feedback { 1.0 } else { 0.0 });
            out.push(1.0 / (1.0 + s.recency as f64));
        }
        out.extend_from_slice(&self.demographic);
        out.extend_from_slice(&self.interest_obs);
    }
}
