//! Agent checkpoints: one parameter file pair per network (see
//! [`crate::approximator::write_net`]), one moment blob per optimizer and an
//! `agent.json` manifest with everything else.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Agent, HyperParams, NetRole};
use crate::approximator::{read_net, write_net, Adam};
use crate::approximator::{checksum, f64_blob, parse_f64_blob};
use crate::{Error, Result};

pub const AGENT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OptimizerEntry {
    role: String,
    lr: f64,
    step: u64,
    checksum: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AgentManifest {
    format_version: u32,
    hyper_params: HyperParams,
    obs_dim: usize,
    action_dim: usize,
    log_alpha: f64,
    optimizers: Vec<OptimizerEntry>,
    alpha_optimizer: Adam,
}

fn write_optimizer(dir: &Path, name: &str, opt: &Adam) -> Result<OptimizerEntry> {
    let mut values = opt.first_moment().to_vec();
    values.extend_from_slice(opt.second_moment());
    let blob = f64_blob(&values);
    let path = dir.join(format!("{name}.adam.bin"));
    fs::write(&path, &blob).map_err(|e| Error::io(&path, e))?;
    Ok(OptimizerEntry {
        role: name.to_string(),
        lr: opt.lr,
        step: opt.step_count(),
        checksum: checksum(&blob),
    })
}

fn read_optimizer(dir: &Path, entry: &OptimizerEntry) -> Result<Adam> {
    let path = dir.join(format!("{}.adam.bin", entry.role));
    let blob = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if checksum(&blob) != entry.checksum {
        return Err(Error::Schema(format!("checksum mismatch for {}", path.display())));
    }
    let mut values = parse_f64_blob(&blob)?;
    let v = values.split_off(values.len() / 2);
    Adam::from_parts(entry.lr, values, v, entry.step)
}

pub fn save_agent(dir: &Path, agent: &Agent) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut optimizers = Vec::new();
    for role in NetRole::ALL {
        if let Some(net) = agent.net(role) {
            write_net(&dir.join(role.name()), net)?;
        }
        if let Some(opt) = agent.optimizer(role) {
            optimizers.push(write_optimizer(dir, role.name(), opt)?);
        }
    }
    let manifest = AgentManifest {
        format_version: AGENT_FORMAT_VERSION,
        hyper_params: agent.hp.clone(),
        obs_dim: agent.obs_dim,
        action_dim: agent.action_dim,
        log_alpha: agent.log_alpha,
        optimizers,
        alpha_optimizer: agent.opt_alpha.clone(),
    };
    let path = dir.join("agent.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}

pub fn load_agent(dir: &Path) -> Result<Agent> {
    let path = dir.join("agent.json");
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_slice(&text)?;
    let version = value.get("format_version").and_then(|v| v.as_u64());
    if version != Some(AGENT_FORMAT_VERSION as u64) {
        return Err(Error::UnsupportedVersion {
            path,
            found: format!("{version:?}"),
        });
    }
    let m: AgentManifest = serde_json::from_value(value)?;
    // Shapes come from the stored nets; a throwaway agent supplies the layout.
    let mut rng = crate::rng::stream(0, crate::rng::Stream::Init);
    let mut agent = Agent::new(m.obs_dim, m.action_dim, m.hyper_params.clone(), &mut rng)?;
    for role in NetRole::ALL {
        if let Some(slot) = agent.net_mut(role) {
            let net = read_net(&dir.join(role.name()))?;
            if net.layer_sizes() != slot.layer_sizes() {
                return Err(Error::Schema(format!("{} network has unexpected shape", role.name())));
            }
            *slot = net;
        }
    }
    for entry in &m.optimizers {
        let role = NetRole::ALL
            .into_iter()
            .find(|r| r.name() == entry.role)
            .ok_or_else(|| Error::Schema(format!("unknown optimizer role {}", entry.role)))?;
        let opt = read_optimizer(dir, entry)?;
        let slot = agent
            .optimizer_mut(role)
            .ok_or_else(|| Error::Schema(format!("unexpected optimizer for {}", entry.role)))?;
        if opt.first_moment().len() != slot.first_moment().len() {
            return Err(Error::Schema(format!("{} optimizer has unexpected size", entry.role)));
        }
        *slot = opt;
    }
    agent.opt_alpha = m.alpha_optimizer;
    agent.log_alpha = m.log_alpha;
    Ok(agent)
}
