//! Central finite-difference checks of every analytic loss gradient.

use rand::Rng;
use serde::Serialize;

use crate::agent::{Agent, Batch, HyperParams, IntrinsicKind, NetRole};
use crate::approximator::Activation;
use crate::rng::{derive_seed, stream, Stream};
use crate::Result;

pub const GRAD_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;
/// Gradient magnitudes below this are compared absolutely.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LossKind {
    Q,
    V,
    Policy,
    Inverse,
    Temperature,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::Q,
        LossKind::V,
        LossKind::Policy,
        LossKind::Inverse,
        LossKind::Temperature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Q => "J_Q",
            LossKind::V => "J_V",
            LossKind::Policy => "J_pi",
            LossKind::Inverse => "J_p",
            LossKind::Temperature => "J_alpha",
        }
    }
}

/// A random agent, minibatch and reparameterization noise.
#[derive(Debug, Clone)]
pub struct Instance {
    pub agent: Agent,
    pub batch: Batch,
    pub noise: Vec<Vec<f64>>,
}

/// Smooth (softplus) random instance. Odd seeds use the KL intrinsic term and
/// twin critics.
pub fn random_instance(seed: u64) -> Result<Instance> {
    let mut rng = stream(derive_seed(seed, 0x6AD), Stream::Init);
    let obs = 2 + rng.random_range(0..4);
    let act = 1 + rng.random_range(0..3);
    let n = 1 + rng.random_range(0..4);
    let odd = seed % 2 == 1;
    let hp = HyperParams {
        hidden_width: 4 + rng.random_range(0..5),
        hidden_layers: 1 + rng.random_range(0..2),
        activation: Activation::Softplus,
        batch_size: n,
        buffer_capacity: n,
        beta: rng.random_range(0.05..1.0),
        gamma: rng.random_range(0.5..0.99),
        reward_weight: rng.random_range(0.5..2.0),
        init_temperature: rng.random_range(0.05..0.5),
        intrinsic: if odd { IntrinsicKind::Kl } else { IntrinsicKind::Empowerment },
        twin_q: odd,
        ..Default::default()
    };
    let agent = Agent::new(obs, act, hp, &mut rng)?;
    let vec = |rng: &mut crate::rng::StreamRng, k: usize, lo: f64, hi: f64| -> Vec<f64> {
        (0..k).map(|_| rng.random_range(lo..hi)).collect()
    };
    let batch = Batch {
        s: (0..n).map(|_| vec(&mut rng, obs, -1.0, 1.0)).collect(),
        a: (0..n).map(|_| vec(&mut rng, act, -0.95, 0.95)).collect(),
        r: (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect(),
        s_next: (0..n).map(|_| vec(&mut rng, obs, -1.0, 1.0)).collect(),
    };
    let noise = (0..n).map(|_| crate::rng::standard_normals(&mut rng, act)).collect();
    Ok(Instance { agent, batch, noise })
}

/// Loss value and analytic gradient with respect to the parameters `kind`
/// trains.
pub fn loss_and_gradient(kind: LossKind, inst: &Instance) -> Result<(f64, Vec<f64>)> {
    let (a, b, z) = (&inst.agent, &inst.batch, &inst.noise);
    match kind {
        LossKind::Q => a.loss_q(b),
        LossKind::V => a.loss_v(b, z).map(|(l, g, _)| (l, g)),
        LossKind::Policy => a.loss_pi(b, z),
        LossKind::Inverse => a.loss_inv(b),
        LossKind::Temperature => a.loss_alpha(b, z).map(|(l, g)| (l, vec![g])),
    }
}

/// Parameters `kind` differentiates, flattened in gradient order.
pub fn parameters(kind: LossKind, agent: &Agent) -> Vec<f64> {
    let net = |r| agent.net(r).map(|n| n.params().to_vec()).unwrap_or_default();
    match kind {
        LossKind::Q => [net(NetRole::Q), net(NetRole::Q2)].concat(),
        LossKind::V => net(NetRole::V),
        LossKind::Policy => net(NetRole::Policy),
        LossKind::Inverse => net(NetRole::Inverse),
        LossKind::Temperature => vec![agent.log_temperature()],
    }
}

pub fn set_parameters(kind: LossKind, agent: &mut Agent, x: &[f64]) {
    if kind == LossKind::Temperature {
        agent.set_log_temperature(x[0]);
        return;
    }
    let nq = agent.net(NetRole::Q).map_or(0, |n| n.param_count());
    let mut put = |r, x: &[f64]| {
        if let Some(n) = agent.net_mut(r) {
            n.params_mut().copy_from_slice(x);
        }
    };
    match kind {
        LossKind::Q => {
            let (a, b) = x.split_at(nq);
            put(NetRole::Q, a);
            if !b.is_empty() {
                put(NetRole::Q2, b);
            }
        }
        LossKind::V => put(NetRole::V, x),
        LossKind::Policy => put(NetRole::Policy, x),
        LossKind::Inverse => put(NetRole::Inverse, x),
        LossKind::Temperature => {}
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Worst relative error over all coordinates of one instance.
pub fn check_instance(kind: LossKind, inst: &Instance) -> Result<f64> {
    let (_, analytic) = loss_and_gradient(kind, inst)?;
    check_against(kind, inst, &analytic)
}

/// Compares a supplied gradient against central differences of `kind`.
pub fn check_against(kind: LossKind, inst: &Instance, analytic: &[f64]) -> Result<f64> {
    let x0 = parameters(kind, &inst.agent);
    let mut probe = inst.clone();
    let mut worst: f64 = 0.0;
    for (i, &g) in analytic.iter().enumerate() {
        let h = FD_STEP * x0[i].abs().max(1.0);
        let mut x = x0.clone();
        x[i] = x0[i] + h;
        set_parameters(kind, &mut probe.agent, &x);
        let up = loss_and_gradient(kind, &probe)?.0;
        x[i] = x0[i] - h;
        set_parameters(kind, &mut probe.agent, &x);
        let down = loss_and_gradient(kind, &probe)?.0;
        worst = worst.max(relative_error(g, (up - down) / (2.0 * h)));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckSummary {
    pub loss: LossKind,
    pub instances: usize,
    pub worst_relative_error: f64,
    pub passed: bool,
}

pub fn gradient_suite(instances: usize, seed: u64) -> Result<Vec<GradCheckSummary>> {
    LossKind::ALL
        .into_iter()
        .map(|kind| {
            let mut worst: f64 = 0.0;
            for k in 0..instances {
                let inst = random_instance(derive_seed(seed, k as u64))?;
                worst = worst.max(check_instance(kind, &inst)?);
            }
            Ok(GradCheckSummary {
                loss: kind,
                instances,
                worst_relative_error: worst,
                passed: worst <= GRAD_TOL,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_loss_passes_on_a_few_instances() {
        for s in gradient_suite(6, 1).unwrap() {
            assert!(s.passed, "{:?}", s);
        }
    }

    #[test]
    fn sign_error_in_value_gradient_is_caught() {
        let inst = random_instance(4).unwrap();
        let (_, g) = loss_and_gradient(LossKind::V, &inst).unwrap();
        let flipped: Vec<f64> = g.iter().map(|v| -v).collect();
        assert!(check_against(LossKind::V, &inst, &flipped).unwrap() > 1.0);
    }

    #[test]
    fn parameter_round_trip() {
        let mut inst = random_instance(3).unwrap();
        for k in LossKind::ALL {
            let x = parameters(k, &inst.agent);
            set_parameters(k, &mut inst.agent, &x);
            assert_eq!(parameters(k, &inst.agent), x);
        }
    }
}
