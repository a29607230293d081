use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gradcheck::{gradient_suite, GRAD_TOL};
use crate::agent::{Agent, HyperParams, NoAugmentation, Trainer};
use crate::causal::{counterfactual_swap, Detector, Transition};
use crate::empowerment::{blahut_arimoto, estimator_correlation, Channel, CorrelationReport, MdpEnv, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::envsim::{DiscreteMdp, EnvConfig, FactoredState, Mechanism, RecEnv};
use crate::rng::{derive_seed, stream, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

/// Settings of the hub-MDP estimator experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HubExperiment {
    pub agent: HyperParams,
    pub episodes: usize,
    pub episode_length: usize,
    /// Policy samples per state when averaging the intrinsic signal.
    pub samples_per_state: usize,
}

impl Default for HubExperiment {
    fn default() -> Self {
        Self {
            agent: HyperParams {
                hidden_width: 32,
                hidden_layers: 2,
                batch_size: 64,
                buffer_capacity: 20_000,
                lr: 1e-3,
                // Horizon comparable to the episode length.
                gamma: 0.9,
                ..Default::default()
            },
            episodes: 300,
            episode_length: 8,
            samples_per_state: 2000,
        }
    }
}

/// Trains an agent on the hub MDP from intrinsic reward alone and correlates
/// its mean intrinsic signal per state with the exact empowerment.
pub fn hub_experiment(seed: u64, cfg: &HubExperiment) -> Result<CorrelationReport> {
    let mdp = DiscreteMdp::hub();
    let mut env = MdpEnv::new(mdp, cfg.episode_length, stream(seed, Stream::Env))?;
    let agent = Agent::new(mdp_dim(&env), 1, cfg.agent.clone(), &mut stream(seed, Stream::Init))?;
    let mut trainer = Trainer::new(agent, stream(seed, Stream::Policy));
    let mut none = NoAugmentation::default();
    for ep in 0..cfg.episodes {
        trainer.train_episode(&mut env, &mut none, ep)?;
    }
    estimator_correlation(&trainer.agent, &env, cfg.samples_per_state, &mut stream(seed, Stream::Evaluation))
}

fn mdp_dim(env: &MdpEnv) -> usize {
    env.mdp().n_states()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepResult {
    pub generated: usize,
    pub valid: usize,
}

impl SweepResult {
    pub fn rate(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.valid as f64 / self.generated as f64
        }
    }
}

/// Small simulator used by the validation sweeps.
pub fn sweep_env_config(seed: u64) -> EnvConfig {
    EnvConfig {
        categories: 4,
        item_dim: 4,
        demo_dim: 2,
        num_items: 24,
        episode_length: 10,
        seed,
        ..Default::default()
    }
}

/// Generates `n` counterfactual transitions from random-policy rollouts and
/// counts how many the simulator's own mechanism reproduces exactly.
pub fn augmentation_sweep(detector: Detector, n: usize, seed: u64) -> Result<SweepResult> {
    let mech = Arc::new(Mechanism::new(sweep_env_config(seed))?);
    let mut env = RecEnv::from_mechanism(Arc::clone(&mech), stream(seed, Stream::Env));
    let mut rng = stream(seed, Stream::Augmentation);
    let mut pool: Vec<Transition<FactoredState>> = Vec::new();
    let mut out = SweepResult { generated: 0, valid: 0 };
    let mut attempts = 0usize;
    while out.generated < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(Error::invalid("augmentation sweep could not generate enough swaps"));
        }
        let mut s = env.reset();
        loop {
            let a: Vec<f64> = (0..mech.config().item_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let o = env.step(&s, &a)?;
            pool.push(Transition {
                s,
                a,
                r: o.reward,
                s_next: o.next_state.clone(),
                done: o.done,
            });
            s = o.next_state;
            if o.done {
                break;
            }
        }
        while out.generated < n && pool.len() >= 2 {
            let i = rng.random_range(0..pool.len());
            let j = rng.random_range(0..pool.len());
            if i == j {
                continue;
            }
            match counterfactual_swap(&mech, &pool[i], &pool[j], detector, &mut rng)? {
                Some(g) => {
                    out.generated += 1;
                    out.valid += usize::from(mech.counterfactual_check(&g)?);
                }
                None => break,
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateOptions {
    pub seed: u64,
    pub gradient_instances: usize,
    pub augmentations: usize,
    pub estimator_seeds: usize,
    pub hub: HubExperiment,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            gradient_instances: 50,
            augmentations: 1000,
            estimator_seeds: 5,
            hub: HubExperiment::default(),
        }
    }
}

fn binary_entropy(p: f64) -> f64 {
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

/// Gradient checks, augmentation validity sweeps, Blahut-Arimoto analytic
/// cases and the hub estimator correlation.
pub fn run_validate(opts: &ValidateOptions) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();

    for s in gradient_suite(opts.gradient_instances, opts.seed)? {
        report.push(
            format!("gradient {}", s.loss.name()),
            s.passed,
            format!("{} instances, worst relative error {:.3e} (tol {GRAD_TOL:e})", s.instances, s.worst_relative_error),
        );
    }

    for (detector, need) in [(Detector::Oracle, 1.0), (Detector::Heuristic, 0.99)] {
        let r = augmentation_sweep(detector, opts.augmentations, opts.seed)?;
        report.push(
            format!("augmentation validity ({detector:?})"),
            r.rate() >= need,
            format!("{}/{} valid, rate {:.3}", r.valid, r.generated, r.rate()),
        );
    }

    let cases: [(&str, Vec<Vec<f64>>, f64, f64); 3] = [
        (
            "deterministic 3-way",
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            3f64.ln(),
            1e-9,
        ),
        ("identical rows", vec![vec![0.3, 0.7]; 3], 0.0, 1e-12),
        (
            "BSC(0.1)",
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            2f64.ln() - binary_entropy(0.1),
            1e-6,
        ),
    ];
    for (name, rows, expect, tol) in cases {
        let c = blahut_arimoto(&Channel::new(rows)?, DEFAULT_TOL, DEFAULT_MAX_ITER)?.capacity;
        report.push(
            format!("Blahut-Arimoto {name}"),
            (c - expect).abs() <= tol,
            format!("capacity {c:.12} expected {expect:.12}"),
        );
    }

    if opts.estimator_seeds > 0 {
        let mut rhos = Vec::new();
        for k in 0..opts.estimator_seeds {
            rhos.push(hub_experiment(derive_seed(opts.seed, k as u64), &opts.hub)?.rho);
        }
        let med = super::metrics::median(&rhos).unwrap_or(f64::NAN);
        report.push(
            "estimator correlation (hub MDP)",
            med >= 0.8,
            format!("median Spearman {med:.3} over {} seeds: {rhos:?}", rhos.len()),
        );
    }
    Ok(report)
}

pub fn write_report_csv(path: &Path, report: &ValidationReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in &report.checks {
        w.serialize(c)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
