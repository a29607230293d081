use rand::Rng;

use super::HyperParams;
use crate::approximator::{gaussian_kl, Adam, DenseNet, SquashedGaussianHead};
use crate::rng::standard_normals;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    /// Reparameterized sample from the policy.
    Explore,
    /// `tanh(mean)`.
    Exploit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetRole {
    Q,
    Q2,
    V,
    VTarget,
    Policy,
    Inverse,
}

impl NetRole {
    pub const ALL: [NetRole; 6] = [
        NetRole::Q,
        NetRole::Q2,
        NetRole::V,
        NetRole::VTarget,
        NetRole::Policy,
        NetRole::Inverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NetRole::Q => "q",
            NetRole::Q2 => "q2",
            NetRole::V => "v",
            NetRole::VTarget => "v_target",
            NetRole::Policy => "policy",
            NetRole::Inverse => "inverse",
        }
    }
}

/// Parameters and optimizer state of every learned component.
///
/// * `q`: `s ⊕ a -> R` (plus `q2` with twin critics)
/// * `v`, `v_target`: `s -> R`
/// * `policy`: `s -> [mean; log_std]`
/// * `inverse`: `s ⊕ s' -> [mean; log_std]` over actions
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub(crate) hp: HyperParams,
    pub(crate) obs_dim: usize,
    pub(crate) action_dim: usize,
    pub(crate) q: DenseNet,
    pub(crate) q2: Option<DenseNet>,
    pub(crate) v: DenseNet,
    pub(crate) v_target: DenseNet,
    pub(crate) policy: DenseNet,
    pub(crate) inverse: DenseNet,
    pub(crate) log_alpha: f64,
    pub(crate) opt_q: Adam,
    pub(crate) opt_q2: Option<Adam>,
    pub(crate) opt_v: Adam,
    pub(crate) opt_policy: Adam,
    pub(crate) opt_inverse: Adam,
    pub(crate) opt_alpha: Adam,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_dim: usize, hp: HyperParams, rng: &mut R) -> Result<Self> {
        hp.validate()?;
        if obs_dim == 0 || action_dim == 0 {
            return Err(Error::invalid("observation and action dimensions must be positive"));
        }
        let act = hp.activation;
        let q = DenseNet::new(&hp.layer_sizes(obs_dim + action_dim, 1), act, rng)?;
        let q2 = if hp.twin_q {
            Some(DenseNet::new(&hp.layer_sizes(obs_dim + action_dim, 1), act, rng)?)
        } else {
            None
        };
        let v = DenseNet::new(&hp.layer_sizes(obs_dim, 1), act, rng)?;
        let v_target = v.clone();
        let policy = DenseNet::new(&hp.layer_sizes(obs_dim, 2 * action_dim), act, rng)?;
        let inverse = DenseNet::new(&hp.layer_sizes(2 * obs_dim, 2 * action_dim), act, rng)?;
        let lr = hp.lr;
        Ok(Self {
            opt_q: Adam::new(q.param_count(), lr),
            opt_q2: q2.as_ref().map(|n| Adam::new(n.param_count(), lr)),
            opt_v: Adam::new(v.param_count(), lr),
            opt_policy: Adam::new(policy.param_count(), lr),
            opt_inverse: Adam::new(inverse.param_count(), lr),
            opt_alpha: Adam::new(1, lr),
            log_alpha: hp.init_temperature.ln(),
            hp,
            obs_dim,
            action_dim,
            q,
            q2,
            v,
            v_target,
            policy,
            inverse,
        })
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.hp.beta = beta;
    }

    pub fn temperature(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn log_temperature(&self) -> f64 {
        self.log_alpha
    }

    pub fn set_log_temperature(&mut self, log_alpha: f64) {
        self.log_alpha = log_alpha;
    }

    /// Temperature as it enters the value target and policy objective.
    pub(crate) fn effective_temperature(&self) -> f64 {
        if self.hp.entropy_bonus {
            self.temperature()
        } else {
            0.0
        }
    }

    pub fn target_entropy(&self) -> f64 {
        self.hp.target_entropy.unwrap_or(-(self.action_dim as f64))
    }

    pub fn net(&self, role: NetRole) -> Option<&DenseNet> {
        match role {
            NetRole::Q => Some(&self.q),
            NetRole::Q2 => self.q2.as_ref(),
            NetRole::V => Some(&self.v),
            NetRole::VTarget => Some(&self.v_target),
            NetRole::Policy => Some(&self.policy),
            NetRole::Inverse => Some(&self.inverse),
        }
    }

    pub fn net_mut(&mut self, role: NetRole) -> Option<&mut DenseNet> {
        match role {
            NetRole::Q => Some(&mut self.q),
            NetRole::Q2 => self.q2.as_mut(),
            NetRole::V => Some(&mut self.v),
            NetRole::VTarget => Some(&mut self.v_target),
            NetRole::Policy => Some(&mut self.policy),
            NetRole::Inverse => Some(&mut self.inverse),
        }
    }

    pub(crate) fn optimizer(&self, role: NetRole) -> Option<&Adam> {
        match role {
            NetRole::Q => Some(&self.opt_q),
            NetRole::Q2 => self.opt_q2.as_ref(),
            NetRole::V => Some(&self.opt_v),
            NetRole::Policy => Some(&self.opt_policy),
            NetRole::Inverse => Some(&self.opt_inverse),
            NetRole::VTarget => None,
        }
    }

    pub(crate) fn optimizer_mut(&mut self, role: NetRole) -> Option<&mut Adam> {
        match role {
            NetRole::Q => Some(&mut self.opt_q),
            NetRole::Q2 => self.opt_q2.as_mut(),
            NetRole::V => Some(&mut self.opt_v),
            NetRole::Policy => Some(&mut self.opt_policy),
            NetRole::Inverse => Some(&mut self.opt_inverse),
            NetRole::VTarget => None,
        }
    }

    fn check_obs(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.obs_dim {
            return Err(Error::invalid(format!(
                "observation has length {}, agent expects {}",
                s.len(),
                self.obs_dim
            )));
        }
        Ok(())
    }

    pub fn policy_head(&self, s: &[f64]) -> Result<SquashedGaussianHead> {
        self.check_obs(s)?;
        SquashedGaussianHead::from_raw(&self.policy.forward(s)?)
    }

    pub fn inverse_head(&self, s: &[f64], s_next: &[f64]) -> Result<SquashedGaussianHead> {
        self.check_obs(s)?;
        self.check_obs(s_next)?;
        let mut x = Vec::with_capacity(2 * self.obs_dim);
        x.extend_from_slice(s);
        x.extend_from_slice(s_next);
        SquashedGaussianHead::from_raw(&self.inverse.forward(&x)?)
    }

    pub fn act<R: Rng + ?Sized>(&self, s: &[f64], mode: ActMode, rng: &mut R) -> Result<Vec<f64>> {
        let head = self.policy_head(s)?;
        match mode {
            ActMode::Exploit => Ok(head.deterministic_action()),
            ActMode::Explore => {
                let noise = standard_normals(rng, self.action_dim);
                Ok(head.sample(&noise)?.action)
            }
        }
    }

    /// One-sample empowerment estimate `log p_xi(a | s, s') - log pi(a | s)`.
    pub fn intrinsic_g(&self, s: &[f64], a: &[f64], s_next: &[f64]) -> Result<f64> {
        let pi = self.policy_head(s)?;
        let inv = self.inverse_head(s, s_next)?;
        Ok(inv.log_prob(a)? - pi.log_prob(a)?)
    }

    /// `-KL(pi(.|s) || p_xi(.|s, s'))` over the pre-squash Gaussians. The
    /// action is unused; it is kept so both intrinsic terms share a signature.
    pub fn kl_intrinsic(&self, s: &[f64], _a: &[f64], s_next: &[f64]) -> Result<f64> {
        let pi = self.policy_head(s)?;
        let inv = self.inverse_head(s, s_next)?;
        Ok(-gaussian_kl(&pi, &inv))
    }

    /// `v_target <- polyak * v + (1 - polyak) * v_target`.
    pub fn polyak_update(&mut self) -> Result<()> {
        let rate = self.hp.polyak;
        self.v_target.blend_from(&self.v, rate)
    }
}
