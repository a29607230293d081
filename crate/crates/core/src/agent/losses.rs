use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Agent, IntrinsicKind, Observation};
use crate::approximator::{gaussian_kl, gaussian_kl_grads, DenseNet, SquashedGaussianHead, SquashedSample, Tape};
use crate::causal::Transition;
use crate::rng::standard_normals;
use crate::{Error, Result};

/// Minibatch with states already flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub s: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub s_next: Vec<Vec<f64>>,
}

impl Batch {
    pub fn from_transitions<S: Observation>(ts: &[&Transition<S>]) -> Self {
        Self {
            s: ts.iter().map(|t| t.s.encode()).collect(),
            a: ts.iter().map(|t| t.a.clone()).collect(),
            r: ts.iter().map(|t| t.r).collect(),
            s_next: ts.iter().map(|t| t.s_next.encode()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Loss values of one gradient step (or their means over an episode).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossReport {
    pub j_q: f64,
    pub j_v: f64,
    pub j_pi: f64,
    pub j_p: f64,
    pub j_alpha: f64,
    /// Mean intrinsic term in the value target.
    pub mean_g: f64,
    pub alpha: f64,
}

impl LossReport {
    pub(crate) fn add(&mut self, o: &LossReport) {
        self.j_q += o.j_q;
        self.j_v += o.j_v;
        self.j_pi += o.j_pi;
        self.j_p += o.j_p;
        self.j_alpha += o.j_alpha;
        self.mean_g += o.mean_g;
        self.alpha += o.alpha;
    }

    pub(crate) fn scaled(&self, k: f64) -> LossReport {
        LossReport {
            j_q: self.j_q * k,
            j_v: self.j_v * k,
            j_pi: self.j_pi * k,
            j_p: self.j_p * k,
            j_alpha: self.j_alpha * k,
            mean_g: self.mean_g * k,
            alpha: self.alpha * k,
        }
    }

    pub fn all_finite(&self) -> bool {
        [
            self.j_q,
            self.j_v,
            self.j_pi,
            self.j_p,
            self.j_alpha,
            self.mean_g,
            self.alpha,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn finite(loss: f64, what: &str) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::non_finite(format!("{what} loss ({loss})")))
    }
}

fn check_noise(b: &Batch, noise: &[Vec<f64>]) -> Result<()> {
    if noise.len() != b.len() {
        return Err(Error::invalid("one noise vector per batch element is required"));
    }
    Ok(())
}

/// Critic evaluation at one `s ⊕ a` input: the smaller critic with its tape.
struct CriticEval<'a> {
    value: f64,
    net: &'a DenseNet,
    tape: Tape,
}

struct PolicyEval {
    tape: Tape,
    head: SquashedGaussianHead,
    sample: SquashedSample,
}

impl Agent {
    fn critic(&self, sa: &[f64]) -> Result<CriticEval<'_>> {
        let tape = self.q.forward_tape(sa)?;
        let value = tape.output()[0];
        if let Some(q2) = &self.q2 {
            let tape2 = q2.forward_tape(sa)?;
            let v2 = tape2.output()[0];
            if v2 < value {
                return Ok(CriticEval {
                    value: v2,
                    net: q2,
                    tape: tape2,
                });
            }
        }
        Ok(CriticEval {
            value,
            net: &self.q,
            tape,
        })
    }

    fn eval_policy(&self, s: &[f64], noise: &[f64]) -> Result<PolicyEval> {
        let tape = self.policy.forward_tape(s)?;
        let head = SquashedGaussianHead::from_raw(tape.output())?;
        let sample = head.sample(noise)?;
        Ok(PolicyEval { tape, head, sample })
    }

    fn inverse_head_at(&self, s: &[f64], s_next: &[f64]) -> Result<SquashedGaussianHead> {
        SquashedGaussianHead::from_raw(&self.inverse.forward(&concat(s, s_next))?)
    }

    /// Intrinsic term at a policy sample drawn for `s`, scored against `s'`.
    fn intrinsic_at(&self, pi: &PolicyEval, inv: &SquashedGaussianHead) -> Result<f64> {
        match self.hp.intrinsic {
            IntrinsicKind::Empowerment => Ok(inv.log_prob_pre_tanh(&pi.sample.pre_tanh)? - pi.sample.log_prob),
            IntrinsicKind::Kl => Ok(-gaussian_kl(&pi.head, inv)),
        }
    }

    /// Mean squared Bellman error against `reward_weight * r + gamma * V_target(s')`.
    /// Gradient covers `q` followed by `q2` when twin critics are enabled.
    pub fn loss_q(&self, b: &Batch) -> Result<(f64, Vec<f64>)> {
        let n = b.len() as f64;
        let nq = self.q.param_count();
        let nq2 = self.q2.as_ref().map_or(0, |q| q.param_count());
        let mut grads = vec![0.0; nq + nq2];
        let mut total = 0.0;
        for i in 0..b.len() {
            let y = self.hp.reward_weight * b.r[i] + self.hp.gamma * self.v_target.forward(&b.s_next[i])?[0];
            let sa = concat(&b.s[i], &b.a[i]);
            let tape = self.q.forward_tape(&sa)?;
            let diff = tape.output()[0] - y;
            total += diff * diff;
            self.q.backprop(&tape, &[2.0 * diff / n], &mut grads[..nq])?;
            if let Some(q2) = &self.q2 {
                let tape = q2.forward_tape(&sa)?;
                let diff = tape.output()[0] - y;
                total += diff * diff;
                q2.backprop(&tape, &[2.0 * diff / n], &mut grads[nq..])?;
            }
        }
        Ok((finite(total / n, "Q")?, grads))
    }

    /// Value regression onto `Q(s, ã) + beta * g(s, ã, s') - alpha * log pi(ã|s)`
    /// with `ã` resampled from the policy. Also returns the mean intrinsic term.
    pub fn loss_v(&self, b: &Batch, noise: &[Vec<f64>]) -> Result<(f64, Vec<f64>, f64)> {
        check_noise(b, noise)?;
        let n = b.len() as f64;
        let beta = self.hp.beta;
        let alpha = self.effective_temperature();
        let mut grads = vec![0.0; self.v.param_count()];
        let mut total = 0.0;
        let mut g_sum = 0.0;
        for i in 0..b.len() {
            let pi = self.eval_policy(&b.s[i], &noise[i])?;
            let q = self.critic(&concat(&b.s[i], &pi.sample.action))?.value;
            let target = if beta != 0.0 {
                let inv = self.inverse_head_at(&b.s[i], &b.s_next[i])?;
                let g = self.intrinsic_at(&pi, &inv)?;
                g_sum += g;
                q + beta * g - alpha * pi.sample.log_prob
            } else {
                q - alpha * pi.sample.log_prob
            };
            let tape = self.v.forward_tape(&b.s[i])?;
            let diff = tape.output()[0] - target;
            total += diff * diff;
            self.v.backprop(&tape, &[2.0 * diff / n], &mut grads)?;
        }
        Ok((finite(total / n, "V")?, grads, g_sum / n))
    }

    /// `-mean(beta * g + Q(s, ã) - alpha * log pi(ã|s))` with the
    /// reparameterized `ã`; gradients reach the policy only.
    pub fn loss_pi(&self, b: &Batch, noise: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        check_noise(b, noise)?;
        let n = b.len() as f64;
        let d = self.action_dim;
        let beta = self.hp.beta;
        let alpha = self.effective_temperature();
        let empowerment = beta != 0.0 && self.hp.intrinsic == IntrinsicKind::Empowerment;
        let kl = beta != 0.0 && self.hp.intrinsic == IntrinsicKind::Kl;
        // log pi appears once through the temperature and once inside g.
        let lp_coef = if empowerment { alpha + beta } else { alpha };
        let mut grads = vec![0.0; self.policy.param_count()];
        let mut total = 0.0;
        for i in 0..b.len() {
            let pi = self.eval_policy(&b.s[i], &noise[i])?;
            let critic = self.critic(&concat(&b.s[i], &pi.sample.action))?;
            let dq = critic.net.input_gradient(&critic.tape, &[1.0])?;
            let dq_da = &dq[self.obs_dim..];
            let p = pi.head.log_prob_partials(&pi.sample.pre_tanh)?;

            let mut objective = critic.value - alpha * pi.sample.log_prob;
            let mut d_u: Vec<f64> = (0..d)
                .map(|j| {
                    let a = pi.sample.action[j];
                    (lp_coef * p.d_pre_tanh[j] - dq_da[j] * (1.0 - a * a)) / n
                })
                .collect();
            let inv = if beta != 0.0 {
                let inv = self.inverse_head_at(&b.s[i], &b.s_next[i])?;
                objective += beta * self.intrinsic_at(&pi, &inv)?;
                Some(inv)
            } else {
                None
            };
            if empowerment {
                let x = inv.as_ref().unwrap().log_prob_partials(&pi.sample.pre_tanh)?;
                for j in 0..d {
                    d_u[j] -= beta * x.d_pre_tanh[j] / n;
                }
            }
            let (mut d_mean, mut d_log_std) = pi.head.reparam_backward(&noise[i], &d_u);
            for j in 0..d {
                d_mean[j] += lp_coef * p.d_mean[j] / n;
                d_log_std[j] += lp_coef * p.d_log_std[j] / n;
            }
            if kl {
                let (km, kls) = gaussian_kl_grads(&pi.head, inv.as_ref().unwrap());
                for j in 0..d {
                    d_mean[j] += beta * km[j] / n;
                    d_log_std[j] += beta * kls[j] / n;
                }
            }
            total -= objective;
            let raw = pi.head.raw_gradient(&d_mean, &d_log_std);
            self.policy.backprop(&pi.tape, &raw, &mut grads)?;
        }
        Ok((finite(total / n, "policy")?, grads))
    }

    /// Negative mean log-likelihood of the stored action under the inverse model.
    pub fn loss_inv(&self, b: &Batch) -> Result<(f64, Vec<f64>)> {
        let n = b.len() as f64;
        let mut grads = vec![0.0; self.inverse.param_count()];
        let mut total = 0.0;
        for i in 0..b.len() {
            let tape = self.inverse.forward_tape(&concat(&b.s[i], &b.s_next[i]))?;
            let head = SquashedGaussianHead::from_raw(tape.output())?;
            let u = SquashedGaussianHead::pre_tanh_of(&b.a[i]);
            total += head.log_prob_pre_tanh(&u)?;
            let x = head.log_prob_partials(&u)?;
            let d_mean: Vec<f64> = x.d_mean.iter().map(|g| -g / n).collect();
            let d_log_std: Vec<f64> = x.d_log_std.iter().map(|g| -g / n).collect();
            self.inverse.backprop(&tape, &head.raw_gradient(&d_mean, &d_log_std), &mut grads)?;
        }
        Ok((finite(-total / n, "inverse dynamics")?, grads))
    }

    /// `-mean(alpha * (log pi(ã|s) + H))` and its derivative in `log alpha`,
    /// which equals the loss itself.
    pub fn loss_alpha(&self, b: &Batch, noise: &[Vec<f64>]) -> Result<(f64, f64)> {
        check_noise(b, noise)?;
        let h = self.target_entropy();
        let mut sum = 0.0;
        for i in 0..b.len() {
            let head = self.policy_head(&b.s[i])?;
            sum += head.sample(&noise[i])?.log_prob + h;
        }
        let loss = finite(-self.temperature() * sum / b.len() as f64, "temperature")?;
        Ok((loss, loss))
    }

    pub(crate) fn draw_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n).map(|_| standard_normals(rng, self.action_dim)).collect()
    }

    /// One gradient step of every component in the order Q, V, policy,
    /// inverse dynamics, temperature, followed by the target-network update.
    pub fn update<R: Rng + ?Sized>(&mut self, b: &Batch, rng: &mut R) -> Result<LossReport> {
        let (j_q, gq) = self.loss_q(b)?;
        let nq = self.q.param_count();
        self.opt_q.update(self.q.params_mut(), &gq[..nq])?;
        if let (Some(q2), Some(opt)) = (self.q2.as_mut(), self.opt_q2.as_mut()) {
            opt.update(q2.params_mut(), &gq[nq..])?;
        }

        let noise = self.draw_noise(b.len(), rng);
        let (j_v, gv, mean_g) = self.loss_v(b, &noise)?;
        self.opt_v.update(self.v.params_mut(), &gv)?;

        let noise = self.draw_noise(b.len(), rng);
        let (j_pi, gp) = self.loss_pi(b, &noise)?;
        self.opt_policy.update(self.policy.params_mut(), &gp)?;

        let (j_p, gi) = self.loss_inv(b)?;
        self.opt_inverse.update(self.inverse.params_mut(), &gi)?;

        let mut j_alpha = 0.0;
        if self.hp.learn_temperature {
            let noise = self.draw_noise(b.len(), rng);
            let (loss, grad) = self.loss_alpha(b, &noise)?;
            j_alpha = loss;
            let mut la = [self.log_alpha];
            self.opt_alpha.update(&mut la, &[grad])?;
            self.log_alpha = la[0];
        }

        self.polyak_update()?;
        Ok(LossReport {
            j_q,
            j_v,
            j_pi,
            j_p,
            j_alpha,
            mean_g,
            alpha: self.temperature(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::HyperParams;
    use rand::SeedableRng;

    fn tiny(hp: HyperParams) -> Agent {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        Agent::new(3, 1, hp, &mut rng).unwrap()
    }

    fn base() -> HyperParams {
        HyperParams {
            hidden_width: 6,
            hidden_layers: 1,
            batch_size: 2,
            buffer_capacity: 10,
            ..Default::default()
        }
    }

    fn batch() -> Batch {
        Batch {
            s: vec![vec![0.1, 0.2, 0.3], vec![-0.5, 0.0, 0.4]],
            a: vec![vec![0.2], vec![-0.7]],
            r: vec![1.0, 1.0],
            s_next: vec![vec![0.0, 0.1, 0.0], vec![0.3, 0.3, -0.2]],
        }
    }

    fn zero_net(net: &mut DenseNet, bias: f64) {
        for p in net.params_mut() {
            *p = 0.0;
        }
        let last = net.num_layers() - 1;
        net.set_bias(last, 0, bias);
    }

    #[test]
    fn bellman_error_analytic_case() {
        let mut a = tiny(HyperParams { gamma: 0.0, ..base() });
        zero_net(&mut a.q, 0.0);
        zero_net(&mut a.v_target, 0.0);
        assert_eq!(a.loss_q(&batch()).unwrap().0, 1.0);
    }

    #[test]
    fn bellman_error_zero_when_q_matches_target() {
        let mut a = tiny(base());
        zero_net(&mut a.v_target, 0.5);
        zero_net(&mut a.q, 1.0 + 0.99 * 0.5);
        let (loss, grads) = a.loss_q(&batch()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn value_loss_zero_when_v_equals_q_without_bonus_terms() {
        let mut a = tiny(HyperParams {
            beta: 0.0,
            entropy_bonus: false,
            ..base()
        });
        zero_net(&mut a.q, 0.7);
        zero_net(&mut a.v, 0.7);
        let noise = vec![vec![0.3], vec![-1.2]];
        assert_eq!(a.loss_v(&batch(), &noise).unwrap().0, 0.0);
    }

    #[test]
    fn constant_critic_without_bonus_gives_zero_policy_gradient() {
        let mut a = tiny(HyperParams {
            beta: 0.0,
            entropy_bonus: false,
            ..base()
        });
        zero_net(&mut a.q, 2.0);
        let noise = vec![vec![0.3], vec![-1.2]];
        let (_, g) = a.loss_pi(&batch(), &noise).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn temperature_gradient_vanishes_at_target_entropy() {
        let mut a = tiny(base());
        let b = batch();
        let noise = vec![vec![0.3], vec![-1.2]];
        let mean_lp: f64 = (0..2)
            .map(|i| a.policy_head(&b.s[i]).unwrap().sample(&noise[i]).unwrap().log_prob)
            .sum::<f64>()
            / 2.0;
        a.hp.target_entropy = Some(-mean_lp);
        let (_, g) = a.loss_alpha(&b, &noise).unwrap();
        assert!(g.abs() < 1e-15);
    }

    #[test]
    fn low_entropy_policy_raises_temperature() {
        let mut a = tiny(base());
        // Force a very narrow policy: log-std bias far below zero.
        let last = a.policy.num_layers() - 1;
        for o in 0..1 {
            for i in 0..6 {
                a.policy.set_weight(last, 1 + o, i, 0.0);
            }
            a.policy.set_bias(last, 1 + o, -6.0);
        }
        let b = batch();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let before = a.temperature();
        a.update(&b, &mut rng).unwrap();
        assert!(a.temperature() > before);
    }

    #[test]
    fn inverse_loss_bottoms_out_on_exact_degenerate_fit() {
        let mut a = tiny(base());
        let b = Batch {
            s: vec![vec![0.1, 0.2, 0.3]],
            a: vec![vec![0.4]],
            r: vec![0.0],
            s_next: vec![vec![0.0, 0.0, 0.0]],
        };
        let last = a.inverse.num_layers() - 1;
        let width = 6;
        for i in 0..width {
            a.inverse.set_weight(last, 0, i, 0.0);
            a.inverse.set_weight(last, 1, i, 0.0);
        }
        a.inverse.set_bias(last, 0, 0.4f64.atanh());
        let mut prev = f64::INFINITY;
        for ls in [-1.0, -5.0, -10.0, -19.0] {
            a.inverse.set_bias(last, 1, ls);
            let (loss, _) = a.loss_inv(&b).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
    }
}
