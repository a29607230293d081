use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, Stream};
use crate::{Error, Result};

/// Explicit tabular MDP, `p[s][a][s']`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMdp {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyMdpConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub seed: u64,
}

impl DiscreteMdp {
    pub fn from_table(table: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n_states = table.len();
        let n_actions = table.first().map(|r| r.len()).unwrap_or(0);
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("MDP needs at least one state and action"));
        }
        let mut probs = Vec::with_capacity(n_states * n_actions * n_states);
        for (s, rows) in table.iter().enumerate() {
            if rows.len() != n_actions {
                return Err(Error::invalid(format!("state {s} has {} actions", rows.len())));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != n_states || row.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::invalid(format!("row ({s}, {a}) is not a distribution over states")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("row ({s}, {a}) sums to {total}")));
                }
                probs.extend_from_slice(row);
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    /// Four states: a hub reaching three distinct successors deterministically,
    /// a two-way state, a noisy binary state and an absorbing state.
    pub fn hub() -> Self {
        let t = vec![
            vec![
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
            ],
            vec![
                vec![0.8, 0.0, 0.2, 0.0],
                vec![0.2, 0.0, 0.8, 0.0],
                vec![0.5, 0.0, 0.5, 0.0],
            ],
            vec![
                vec![0.0, 0.0, 0.0, 1.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
        ];
        Self::from_table(t).expect("hub MDP is well formed")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.probs[start..start + self.n_states]
    }

    pub fn prob(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.row(s, a)[s_next]
    }

    /// Action-to-successor channel of state `s` (rows = actions).
    pub fn channel_rows(&self, s: usize) -> Vec<Vec<f64>> {
        (0..self.n_actions).map(|a| self.row(s, a).to_vec()).collect()
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let row = self.row(s, a);
        for (k, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        // Rounding can leave `acc` a hair below one.
        row.iter().rposition(|&p| p > 0.0).unwrap_or(self.n_states - 1)
    }
}

/// Random MDP whose state 0 maps action `a` deterministically to state
/// `a + 1`; every other row is a random distribution.
pub fn make_toy_mdp(config: ToyMdpConfig) -> Result<DiscreteMdp> {
    let ToyMdpConfig {
        n_states,
        n_actions,
        seed,
    } = config;
    if n_states == 0 || n_states > 32 || n_actions == 0 || n_actions > 8 {
        return Err(Error::invalid("toy MDP needs 1..=32 states and 1..=8 actions"));
    }
    if n_actions >= n_states {
        return Err(Error::invalid("toy MDP needs more states than actions for its hub state"));
    }
    let mut rng = stream(seed, Stream::Init);
    let mut table = vec![vec![vec![0.0; n_states]; n_actions]; n_states];
    for (s, rows) in table.iter_mut().enumerate() {
        for (a, row) in rows.iter_mut().enumerate() {
            if s == 0 {
                row[a + 1] = 1.0;
                continue;
            }
            // Flat Dirichlet via normalized exponentials.
            for p in row.iter_mut() {
                *p = -(1.0 - rng.random::<f64>()).ln();
            }
            let total: f64 = row.iter().sum();
            for p in row.iter_mut() {
                *p /= total;
            }
            // Push any rounding residue onto the largest entry.
            let resid = 1.0 - row.iter().sum::<f64>();
            let k = (0..n_states)
                .max_by(|&i, &j| row[i].total_cmp(&row[j]))
                .unwrap();
            row[k] += resid;
        }
    }
    DiscreteMdp::from_table(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_rows_are_stochastic_and_reproducible() {
        let cfg = ToyMdpConfig {
            n_states: 7,
            n_actions: 3,
            seed: 4,
        };
        let m = make_toy_mdp(cfg).unwrap();
        for s in 0..7 {
            for a in 0..3 {
                assert!((m.row(s, a).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
        assert_eq!(m, make_toy_mdp(cfg).unwrap());
        let hub: Vec<usize> = (0..3)
            .map(|a| m.row(0, a).iter().position(|&p| p == 1.0).unwrap())
            .collect();
        assert_eq!(hub, vec![1, 2, 3]);
    }

    #[test]
    fn oversized_toy_is_rejected() {
        let cfg = ToyMdpConfig {
            n_states: 33,
            n_actions: 3,
            seed: 0,
        };
        assert!(make_toy_mdp(cfg).is_err());
    }

    #[test]
    fn non_stochastic_table_is_rejected() {
        assert!(DiscreteMdp::from_table(vec![vec![vec![0.5, 0.4]], vec![vec![1.0, 0.0]]]).is_err());
    }
}
