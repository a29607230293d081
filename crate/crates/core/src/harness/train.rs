use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{write_metrics, MetricsRecord, MetricsWriter};
use super::{ExperimentConfig, Variant};
use crate::agent::{load_agent, save_agent, Agent, Augment, Environment, LossReport, NoAugmentation, ReplayBuffer, Trainer};
use crate::causal::Augmenter;
use crate::envsim::{FactoredState, Mechanism, RecEnv};
use crate::rng::{derive_seed, stream, Stream, StreamRng};
use crate::{Error, Result};

pub const RUN_STATE_VERSION: u32 = 1;
const EVAL_SALT: u64 = 0xE7A1;
const CLI_EVAL_SALT: u64 = 0xC11E;

/// Everything a per-seed run needs besides the agent and replay buffer.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunState {
    format_version: u32,
    config: ExperimentConfig,
    seed: u64,
    episode: usize,
    total_steps: usize,
    augmented_total: usize,
    loss_sum: LossReport,
    loss_count: usize,
    threshold: f64,
    records: Vec<MetricsRecord>,
    policy_rng: StreamRng,
    env_rng: StreamRng,
    augmentation_rng: StreamRng,
}

enum Augmentation {
    On(Augmenter),
    Off(NoAugmentation),
}

impl Augmentation {
    fn as_dyn(&mut self) -> &mut dyn Augment<FactoredState> {
        match self {
            Augmentation::On(a) => a,
            Augmentation::Off(a) => a,
        }
    }

    fn rng(&self, fallback: &StreamRng) -> StreamRng {
        match self {
            Augmentation::On(a) => a.rng().clone(),
            Augmentation::Off(_) => fallback.clone(),
        }
    }
}

/// One seed of one experiment.
pub struct SeedRun {
    config: ExperimentConfig,
    seed: u64,
    mechanism: Arc<Mechanism>,
    env: RecEnv,
    trainer: Trainer<FactoredState>,
    augmentation: Augmentation,
    idle_augmentation_rng: StreamRng,
    episode: usize,
    augmented_total: usize,
    loss_sum: LossReport,
    loss_count: usize,
    threshold: f64,
    records: Vec<MetricsRecord>,
}

/// Simulator for a run seed. The catalog and user model depend on both the
/// configured environment seed and the run seed, never on the variant.
pub fn run_mechanism(config: &ExperimentConfig, seed: u64) -> Result<Arc<Mechanism>> {
    let mut env_cfg = config.env.clone();
    env_cfg.seed = derive_seed(config.env.seed, seed);
    Ok(Arc::new(Mechanism::new(env_cfg)?))
}

impl SeedRun {
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mechanism = run_mechanism(config, seed)?;
        let env = RecEnv::from_mechanism(Arc::clone(&mechanism), stream(seed, Stream::Env));
        let hp = config.resolved_agent();
        let agent = Agent::new(env.observation_dim(), env.action_dim(), hp, &mut stream(seed, Stream::Init))?;
        let trainer = Trainer::new(agent, stream(seed, Stream::Policy));
        let aug_rng = stream(seed, Stream::Augmentation);
        let augmentation = Self::make_augmentation(config, &mechanism, aug_rng.clone())?;
        Ok(Self {
            config: config.clone(),
            seed,
            mechanism,
            env,
            trainer,
            augmentation,
            idle_augmentation_rng: aug_rng,
            episode: 0,
            augmented_total: 0,
            loss_sum: LossReport::default(),
            loss_count: 0,
            threshold: 0.0,
            records: Vec::new(),
        })
    }

    fn make_augmentation(config: &ExperimentConfig, mech: &Arc<Mechanism>, rng: StreamRng) -> Result<Augmentation> {
        Ok(if config.ablation.no_augmentation {
            Augmentation::Off(NoAugmentation {
                schedule: config.augmentation.clone(),
            })
        } else {
            Augmentation::On(Augmenter::new(Arc::clone(mech), config.augmentation.clone(), rng)?)
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variant(&self) -> Variant {
        self.config.variant()
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn agent(&self) -> &Agent {
        &self.trainer.agent
    }

    pub fn records(&self) -> &[MetricsRecord] {
        &self.records
    }

    pub fn is_finished(&self) -> bool {
        self.episode >= self.config.episodes
    }

    fn abort(&self, e: Error) -> Error {
        Error::TrainingAborted {
            seed: self.seed,
            episode: self.episode,
            source: Box::new(e),
        }
    }

    /// Trains one episode and evaluates when the schedule says so. Returns
    /// the new metrics row, if any.
    pub fn advance(&mut self) -> Result<Option<MetricsRecord>> {
        let report = self
            .trainer
            .train_episode(&mut self.env, self.augmentation.as_dyn(), self.episode)
            .map_err(|e| self.abort(e))?;
        self.episode += 1;
        self.augmented_total += report.augmented;
        self.threshold = report.threshold;
        if report.updates > 0 {
            self.loss_sum.add(&report.losses.scaled(report.updates as f64));
            self.loss_count += report.updates;
        }
        if self.episode % self.config.eval_every != 0 {
            return Ok(None);
        }
        let rec = self.evaluate().map_err(|e| self.abort(e))?;
        self.records.push(rec.clone());
        self.loss_sum = LossReport::default();
        self.loss_count = 0;
        Ok(Some(rec))
    }

    fn evaluate(&self) -> Result<MetricsRecord> {
        // Same held-out users at every evaluation of a seed.
        let base = derive_seed(self.seed, EVAL_SALT);
        let (summary, fingerprint) = evaluate_policy(&self.trainer, &self.mechanism, base, self.config.eval_episodes)?;
        let losses = if self.loss_count > 0 {
            self.loss_sum.scaled(1.0 / self.loss_count as f64)
        } else {
            LossReport::default()
        };
        let rec = MetricsRecord {
            variant: self.variant(),
            seed: self.seed,
            episode: self.episode,
            env_steps: self.trainer.total_steps,
            ctr: summary.ctr,
            episode_return: summary.mean_return,
            threshold_t: self.threshold,
            buffer_size: self.trainer.buffer.len(),
            augmented_count: self.augmented_total,
            j_q: losses.j_q,
            j_v: losses.j_v,
            j_pi: losses.j_pi,
            j_p: losses.j_p,
            alpha_t: self.trainer.agent.temperature(),
            eval_fingerprint: fingerprint,
        };
        if !rec.all_finite() {
            return Err(Error::non_finite("metrics"));
        }
        Ok(rec)
    }

    pub fn save_checkpoint(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_agent(&dir.join("agent"), &self.trainer.agent)?;
        let state = RunState {
            format_version: RUN_STATE_VERSION,
            config: self.config.clone(),
            seed: self.seed,
            episode: self.episode,
            total_steps: self.trainer.total_steps,
            augmented_total: self.augmented_total,
            loss_sum: self.loss_sum,
            loss_count: self.loss_count,
            threshold: self.threshold,
            records: self.records.clone(),
            policy_rng: self.trainer.rng.clone(),
            env_rng: self.env.rng().clone(),
            augmentation_rng: self.augmentation.rng(&self.idle_augmentation_rng),
        };
        write_json(&dir.join("run.json"), &state)?;
        write_json(&dir.join("buffer.json"), &self.trainer.buffer)
    }

    pub fn load_checkpoint(dir: &Path) -> Result<Self> {
        let path = dir.join("run.json");
        let value: serde_json::Value = read_json(&path)?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if version != Some(RUN_STATE_VERSION as u64) {
            return Err(Error::UnsupportedVersion {
                path,
                found: format!("{version:?}"),
            });
        }
        let state: RunState = serde_json::from_value(value)?;
        let mut run = Self::new(&state.config, state.seed)?;
        let agent = load_agent(&dir.join("agent"))?;
        if agent.hyper_params() != run.trainer.agent.hyper_params() {
            return Err(Error::Schema("checkpoint agent does not match its run configuration".into()));
        }
        run.trainer.agent = agent;
        run.trainer.buffer = read_json::<ReplayBuffer<FactoredState>>(&dir.join("buffer.json"))?;
        run.trainer.rng = state.policy_rng;
        run.trainer.total_steps = state.total_steps;
        run.env.set_rng(state.env_rng);
        match &mut run.augmentation {
            Augmentation::On(a) => a.set_rng(state.augmentation_rng),
            Augmentation::Off(_) => run.idle_augmentation_rng = state.augmentation_rng,
        }
        run.episode = state.episode;
        run.augmented_total = state.augmented_total;
        run.loss_sum = state.loss_sum;
        run.loss_count = state.loss_count;
        run.threshold = state.threshold;
        run.records = state.records;
        Ok(run)
    }

    /// Runs to the configured episode budget, streaming rows to `csv_path`
    /// and checkpointing under `checkpoint_root`.
    pub fn run_to_end(&mut self, csv_path: &Path, checkpoint_root: Option<&Path>) -> Result<Vec<MetricsRecord>> {
        let mut writer = MetricsWriter::create(csv_path)?;
        for r in &self.records {
            writer.append(r)?;
        }
        while !self.is_finished() {
            if let Some(rec) = self.advance()? {
                writer.append(&rec)?;
            }
            if let Some(root) = checkpoint_root {
                if self.episode % self.config.checkpoint_every == 0 || self.is_finished() {
                    self.save_checkpoint(&checkpoint_dir(root, self.seed, self.episode))?;
                }
            }
        }
        if let Some(root) = checkpoint_root {
            if self.config.episodes == 0 {
                self.save_checkpoint(&checkpoint_dir(root, self.seed, 0))?;
            }
        }
        Ok(self.records.clone())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_vec(value)?).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn checkpoint_dir(root: &Path, seed: u64, episode: usize) -> PathBuf {
    root.join(format!("seed{seed}")).join(format!("ep{episode:06}"))
}

pub fn seed_metrics_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("metrics_seed{seed}.csv"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub steps: usize,
    pub clicks: usize,
    pub ctr: f64,
    pub mean_return: f64,
}

/// Deterministic-policy evaluation on users drawn from `base_seed`; also
/// returns a digest of those users.
pub fn evaluate_policy(
    trainer: &Trainer<FactoredState>,
    mechanism: &Arc<Mechanism>,
    base_seed: u64,
    episodes: usize,
) -> Result<(EvalSummary, String)> {
    let mut hasher = Sha256::new();
    let (mut steps, mut clicks, mut ret) = (0, 0, 0.0);
    for j in 0..episodes {
        let mut env = RecEnv::from_mechanism(Arc::clone(mechanism), stream(derive_seed(base_seed, j as u64), Stream::Evaluation));
        let (r, hits, n) = trainer.evaluate_episode(&mut env)?;
        let user = env.user();
        for v in user.static_interest.iter().chain(&user.demographic) {
            hasher.update(v.to_le_bytes());
        }
        steps += n;
        clicks += hits;
        ret += r;
    }
    let digest = hasher.finalize();
    let summary = EvalSummary {
        episodes,
        steps,
        clicks,
        ctr: if steps > 0 { clicks as f64 / steps as f64 } else { 0.0 },
        mean_return: if episodes > 0 { ret / episodes as f64 } else { 0.0 },
    };
    Ok((summary, hex::encode(&digest[..8])))
}

/// Evaluates a saved run checkpoint on fresh users.
pub fn eval_checkpoint(dir: &Path, episodes: usize) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(Error::invalid("episodes must be positive"));
    }
    let run = SeedRun::load_checkpoint(dir)?;
    let base = derive_seed(run.seed, CLI_EVAL_SALT);
    Ok(evaluate_policy(&run.trainer, &run.mechanism, base, episodes)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub variant: Variant,
    /// Per-seed rows in configuration seed order.
    pub per_seed: Vec<(u64, Vec<MetricsRecord>)>,
}

impl TrainOutcome {
    pub fn merged(&self) -> Vec<MetricsRecord> {
        self.per_seed.iter().flat_map(|(_, r)| r.iter().cloned()).collect()
    }
}

/// Trains every seed (in parallel), writing `metrics_seed<N>.csv`, the merged
/// `metrics.csv`, the resolved `config.json` and checkpoints under `out`.
pub fn run_train(config: &ExperimentConfig, out: &Path) -> Result<TrainOutcome> {
    config.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    fs::write(out.join("config.json"), serde_json::to_vec_pretty(config)?).map_err(|e| Error::io(out, e))?;
    let ckpt_root = out.join("checkpoints");
    let per_seed: Vec<Result<(u64, Vec<MetricsRecord>)>> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut run = SeedRun::new(config, seed)?;
            let rows = run.run_to_end(&seed_metrics_path(out, seed), Some(&ckpt_root))?;
            Ok((seed, rows))
        })
        .collect();
    let per_seed = per_seed.into_iter().collect::<Result<Vec<_>>>()?;
    let outcome = TrainOutcome {
        variant: config.variant(),
        per_seed,
    };
    write_metrics(&out.join("metrics.csv"), &outcome.merged())?;
    Ok(outcome)
}

/// Continues a run from a checkpoint directory to its episode budget.
pub fn resume_train(checkpoint: &Path, out: &Path) -> Result<Vec<MetricsRecord>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut run = SeedRun::load_checkpoint(checkpoint)?;
    let seed = run.seed;
    run.run_to_end(&seed_metrics_path(out, seed), Some(&out.join("checkpoints")))
}
