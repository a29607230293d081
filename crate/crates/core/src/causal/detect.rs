use serde::{Deserialize, Serialize};

use super::connected_components;
use crate::envsim::{FactoredState, Mechanism};
use crate::Result;

/// How independence between state components and the action is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    /// Connected components of the simulator's true local causal graph.
    #[default]
    Oracle,
    /// Category slots other than the category of the item nearest to the
    /// action are independent; demographic and interest never are.
    Heuristic,
}

/// Sorted component indices outside the action's connected component.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndependentSet(Vec<usize>);

impl IndependentSet {
    pub fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn intersection(&self, other: &IndependentSet) -> IndependentSet {
        IndependentSet(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }
}

pub fn independent_components(
    mech: &Mechanism,
    s: &FactoredState,
    a: &[f64],
    detector: Detector,
) -> Result<IndependentSet> {
    mech.check_state(s)?;
    match detector {
        Detector::Oracle => {
            let mask = mech.ground_truth_mask(s, a)?;
            let action_node = mask.n_nodes() - 1;
            let comps = connected_components(&mask);
            let mut out: Vec<usize> = comps
                .into_iter()
                .filter(|g| !g.contains(&action_node))
                .flatten()
                .collect();
            out.sort_unstable();
            Ok(IndependentSet(out))
        }
        Detector::Heuristic => {
            let category = mech.catalog().nearest(a)?.category;
            Ok(IndependentSet(
                (0..s.slots.len()).filter(|&c| c != category).collect(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envsim::{EnvConfig, RecEnv};

    fn env(categories: usize) -> RecEnv {
        RecEnv::new(EnvConfig {
            categories,
            num_items: 4 * categories,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn oracle_excludes_action_category() {
        let mut e = env(3);
        let s = e.reset();
        let item = e.mechanism().catalog().items().iter().find(|i| i.category == 1).unwrap().clone();
        let set = independent_components(e.mechanism(), &s, &item.features, Detector::Oracle).unwrap();
        assert_eq!(set.indices(), &[0, 2]);
    }

    #[test]
    fn single_category_has_no_independent_slot() {
        let mut e = env(1);
        let s = e.reset();
        for d in [Detector::Oracle, Detector::Heuristic] {
            let set = independent_components(e.mechanism(), &s, &s.interest_obs, d).unwrap();
            assert!(set.is_empty());
        }
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let mut e = env(3);
        let mut s = e.reset();
        s.slots.pop();
        assert!(independent_components(e.mechanism(), &s, &s.interest_obs.clone(), Detector::Oracle).is_err());
    }

    #[test]
    fn intersection_keeps_common_indices() {
        let a = IndependentSet::from_sorted(vec![0, 2, 3]);
        let b = IndependentSet::from_sorted(vec![2, 3, 5]);
        assert_eq!(a.intersection(&b).indices(), &[2, 3]);
    }
}
