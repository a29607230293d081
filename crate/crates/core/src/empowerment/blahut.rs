use serde::{Deserialize, Serialize};

use crate::envsim::DiscreteMdp;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

const MAX_RELAXATION: f64 = 100.0;

/// Row-stochastic `p(s' | a)`: rows are actions, columns successor states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(Error::invalid("channel needs at least one action and one outcome"));
        }
        for (a, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::invalid(format!("channel row {a} has {} entries, expected {width}", row.len())));
            }
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::invalid(format!("channel row {a} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("channel row {a} sums to {total}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn output_marginal(&self, policy: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.n_outputs()];
        for (row, &pa) in self.rows.iter().zip(policy) {
            for (qk, &p) in q.iter_mut().zip(row) {
                *qk += pa * p;
            }
        }
        q
    }

    /// `I[a; s']` in nats for the given input distribution.
    pub fn mutual_information(&self, policy: &[f64]) -> f64 {
        let q = self.output_marginal(policy);
        let mut total = 0.0;
        for (row, &pa) in self.rows.iter().zip(policy) {
            if pa == 0.0 {
                continue;
            }
            for (&p, &qk) in row.iter().zip(&q) {
                if p > 0.0 {
                    total += pa * p * (p / qk).ln();
                }
            }
        }
        total.max(0.0)
    }
}

impl Channel {
    /// `max_a KL(p(.|a) || q)`, an upper bound on the capacity for any policy.
    pub fn upper_bound(&self, policy: &[f64]) -> f64 {
        let q = self.output_marginal(policy);
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&q)
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(&p, &qk)| p * (p / qk).ln())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpowermentResult {
    /// Channel capacity in nats.
    pub capacity: f64,
    /// Maximizing input distribution.
    pub policy: Vec<f64>,
    pub iterations: usize,
    /// Mutual information after each iteration, starting from the uniform policy.
    pub history: Vec<f64>,
}

/// Channel capacity by alternating the action posterior
/// `q(a | s') ~ pi(a) p(s' | a)` and the policy update
/// `pi(a) ~ exp(sum_s' p(s' | a) ln q(a | s'))`, stopping once the capacity
/// is pinned to within `tol`.
pub fn blahut_arimoto(ch: &Channel, tol: f64, max_iter: usize) -> Result<EmpowermentResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let n_a = ch.n_inputs();
    let n_s = ch.n_outputs();
    let mut policy = vec![1.0 / n_a as f64; n_a];
    let mut capacity = ch.mutual_information(&policy);
    let mut history = vec![capacity];
    let mut posterior = vec![0.0; n_a * n_s];
    let mut mu = 2.0;
    for iter in 1..=max_iter {
        let q = ch.output_marginal(&policy);
        for (a, row) in ch.rows().iter().enumerate() {
            for k in 0..n_s {
                posterior[a * n_s + k] = if q[k] > 0.0 { policy[a] * row[k] / q[k] } else { 0.0 };
            }
        }
        let mut log_w = vec![(f64::NEG_INFINITY, 0.0); n_a];
        for (a, row) in ch.rows().iter().enumerate() {
            if policy[a] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for (k, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    s += p * posterior[a * n_s + k].ln();
                }
            }
            log_w[a] = (s, policy[a]);
        }
        let plain = normalized_exp(&log_w, |lw, _| lw);
        // Over-relaxed step: scale the log-ratio to the current policy by
        // `mu`. It is kept only when it beats the plain step, so the capacity
        // sequence stays monotone.
        let accelerated = normalized_exp(&log_w, |lw, pa| pa.ln() + mu * (lw - pa.ln()));
        let (i_plain, i_acc) = (ch.mutual_information(&plain), ch.mutual_information(&accelerated));
        // An entry that underflows to zero could never recover.
        let keeps_support = accelerated.iter().zip(&plain).all(|(&x, &y)| y == 0.0 || x > 0.0);
        if keeps_support && i_acc > i_plain {
            policy = accelerated;
            mu = (mu * 1.5).min(MAX_RELAXATION);
        } else {
            policy = plain;
            mu = (mu / 2.0).max(1.0);
        }
        let next = ch.mutual_information(&policy);
        history.push(next);
        capacity = next;
        // The largest per-action divergence from the output marginal bounds
        // the capacity from above; a closed gap also bounds every later change.
        if ch.upper_bound(&policy) - capacity < tol {
            return Ok(EmpowermentResult {
                capacity,
                policy,
                iterations: iter,
                history,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        capacity,
        policy,
    })
}

fn normalized_exp(log_w: &[(f64, f64)], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let logits: Vec<f64> = log_w
        .iter()
        .map(|&(lw, pa)| if pa == 0.0 { f64::NEG_INFINITY } else { f(lw, pa) })
        .collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - top).exp()).collect();
    let z: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= z;
    }
    out
}

/// Capacity of every state's action-to-successor channel.
pub fn exact_empowerment_map(mdp: &DiscreteMdp) -> Result<Vec<f64>> {
    if mdp.n_states() > 32 {
        return Err(Error::invalid("exact empowerment is limited to 32 states"));
    }
    (0..mdp.n_states())
        .map(|s| {
            let ch = Channel::new(mdp.channel_rows(s))?;
            Ok(blahut_arimoto(&ch, DEFAULT_TOL, DEFAULT_MAX_ITER)?.capacity)
        })
        .collect()
}
