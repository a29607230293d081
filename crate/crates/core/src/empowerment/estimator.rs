use std::path::Path;

use serde::Serialize;

use super::{average_ranks, exact_empowerment_map, spearman};
use crate::agent::{ActMode, Agent, EnvStep, Environment};
use crate::envsim::DiscreteMdp;
use crate::rng::StreamRng;
use crate::{Error, Result};
use rand::Rng;

/// Continuous-control view of a tabular MDP: one-hot observations and a
/// single action coordinate in [-1, 1] split into equal-width bins.
#[derive(Debug, Clone)]
pub struct MdpEnv {
    mdp: DiscreteMdp,
    rng: StreamRng,
    episode_length: usize,
    t: usize,
}

impl MdpEnv {
    pub fn new(mdp: DiscreteMdp, episode_length: usize, rng: StreamRng) -> Result<Self> {
        if episode_length == 0 {
            return Err(Error::invalid("episode length must be positive"));
        }
        Ok(Self {
            mdp,
            rng,
            episode_length,
            t: 0,
        })
    }

    pub fn mdp(&self) -> &DiscreteMdp {
        &self.mdp
    }

    pub fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.mdp.n_states()];
        v[s] = 1.0;
        v
    }

    pub fn decode_state(&self, obs: &[f64]) -> Result<usize> {
        if obs.len() != self.mdp.n_states() {
            return Err(Error::invalid("observation does not match the MDP"));
        }
        obs.iter()
            .position(|&x| x == 1.0)
            .ok_or_else(|| Error::invalid("observation is not one-hot"))
    }

    pub fn action_bin(&self, action: f64) -> usize {
        let n = self.mdp.n_actions();
        let u = ((action + 1.0) / 2.0 * n as f64).floor();
        (u.max(0.0) as usize).min(n - 1)
    }
}

impl Environment for MdpEnv {
    type State = Vec<f64>;

    fn observation_dim(&self) -> usize {
        self.mdp.n_states()
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset_env(&mut self) -> Vec<f64> {
        self.t = 0;
        let s = self.rng.random_range(0..self.mdp.n_states());
        self.one_hot(s)
    }

    fn step_env(&mut self, state: &Vec<f64>, action: &[f64]) -> Result<EnvStep<Vec<f64>>> {
        let s = self.decode_state(state)?;
        let a = self.action_bin(action[0]);
        let next = self.mdp.sample_next(s, a, &mut self.rng);
        self.t += 1;
        Ok(EnvStep {
            next_state: self.one_hot(next),
            reward: 0.0,
            done: self.t >= self.episode_length,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRow {
    pub state: usize,
    pub exact_capacity: f64,
    pub mean_g: f64,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub rho: f64,
    pub rows: Vec<StateRow>,
}

/// Spearman correlation between each state's mean intrinsic signal (actions
/// drawn from the policy, successors from the MDP) and its exact empowerment.
pub fn estimator_correlation(
    agent: &Agent,
    env: &MdpEnv,
    n_samples: usize,
    rng: &mut StreamRng,
) -> Result<CorrelationReport> {
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample per state"));
    }
    let mdp = env.mdp();
    let exact = exact_empowerment_map(mdp)?;
    let mut mean_g = Vec::with_capacity(mdp.n_states());
    for s in 0..mdp.n_states() {
        let obs = env.one_hot(s);
        let mut total = 0.0;
        for _ in 0..n_samples {
            let a = agent.act(&obs, ActMode::Explore, rng)?;
            let next = mdp.sample_next(s, env.action_bin(a[0]), rng);
            total += agent.intrinsic_g(&obs, &a, &env.one_hot(next))?;
        }
        mean_g.push(total / n_samples as f64);
    }
    let rho = spearman(&mean_g, &exact)?;
    let ranks = average_ranks(&mean_g)?;
    let rows = (0..mdp.n_states())
        .map(|s| StateRow {
            state: s,
            exact_capacity: exact[s],
            mean_g: mean_g[s],
            rank: ranks[s],
        })
        .collect();
    Ok(CorrelationReport { rho, rows })
}

pub fn write_validation_csv(path: &Path, rows: &[StateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn bins_cover_the_action_interval() {
        let env = MdpEnv::new(DiscreteMdp::hub(), 4, stream(0, Stream::Env)).unwrap();
        assert_eq!(env.action_bin(-1.0), 0);
        assert_eq!(env.action_bin(-0.34), 0);
        assert_eq!(env.action_bin(0.0), 1);
        assert_eq!(env.action_bin(0.34), 2);
        assert_eq!(env.action_bin(1.0), 2);
    }

    #[test]
    fn episodes_follow_the_table() {
        let mut env = MdpEnv::new(DiscreteMdp::hub(), 5, stream(3, Stream::Env)).unwrap();
        for _ in 0..20 {
            let mut s = env.reset_env();
            for t in 0..5 {
                let out = env.step_env(&s, &[0.9]).unwrap();
                assert_eq!(out.done, t == 4);
                let from = env.decode_state(&s).unwrap();
                let to = env.decode_state(&out.next_state).unwrap();
                assert!(env.mdp().prob(from, 2, to) > 0.0);
                s = out.next_state;
            }
        }
    }

    #[test]
    fn exact_capacities_correlate_perfectly_with_themselves() {
        let exact = exact_empowerment_map(&DiscreteMdp::hub()).unwrap();
        assert!((spearman(&exact, &exact).unwrap() - 1.0).abs() < 1e-12);
    }
}
