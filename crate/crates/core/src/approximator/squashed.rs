use crate::{Error, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Guard inside `ln(1 - a^2 + eps)` of the tanh change of variables.
pub const TANH_EPS: f64 = 1e-6;
/// Squashed actions are clipped to `±ACTION_BOUND` so they stay strictly
/// inside the open interval even when `tanh` rounds to one.
const ACTION_BOUND: f64 = 1.0 - 1e-12;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian over pre-squash values, squashed through `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedGaussianHead {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    /// Components whose raw log-std fell outside the clamp range (zero gradient).
    clamped: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample {
    pub action: Vec<f64>,
    pub pre_tanh: Vec<f64>,
    pub log_prob: f64,
}

/// Partial derivatives of `log_prob_pre_tanh(u)` holding the other arguments fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPartials {
    pub d_pre_tanh: Vec<f64>,
    pub d_mean: Vec<f64>,
    pub d_log_std: Vec<f64>,
}

pub(crate) fn squash(u: f64) -> f64 {
    u.tanh().clamp(-ACTION_BOUND, ACTION_BOUND)
}

fn unsquash(a: f64) -> f64 {
    a.clamp(-ACTION_BOUND, ACTION_BOUND).atanh()
}

impl SquashedGaussianHead {
    pub fn new(mean: Vec<f64>, log_std: Vec<f64>) -> Result<Self> {
        if mean.len() != log_std.len() {
            return Err(Error::invalid("mean and log_std differ in length"));
        }
        let clamped = log_std.iter().map(|&l| !(LOG_STD_MIN..=LOG_STD_MAX).contains(&l)).collect();
        let log_std = log_std.iter().map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
        Ok(Self { mean, log_std, clamped })
    }

    /// Splits a raw network output `[mean; log_std]` of length `2d`.
    pub fn from_raw(raw: &[f64]) -> Result<Self> {
        if raw.len() % 2 != 0 {
            return Err(Error::invalid("raw head output must have even length"));
        }
        let d = raw.len() / 2;
        Self::new(raw[..d].to_vec(), raw[d..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check_len(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!(
                "{what} has length {}, head dimension is {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn deterministic_action(&self) -> Vec<f64> {
        self.mean.iter().map(|&m| squash(m)).collect()
    }

    /// Reparameterized sample `tanh(mean + exp(log_std) * noise)`.
    pub fn sample(&self, noise: &[f64]) -> Result<SquashedSample> {
        self.check_len(noise, "noise")?;
        let pre_tanh: Vec<f64> = self
            .mean
            .iter()
            .zip(&self.log_std)
            .zip(noise)
            .map(|((m, l), e)| m + l.exp() * e)
            .collect();
        let log_prob = self.log_prob_pre_tanh(&pre_tanh)?;
        Ok(SquashedSample {
            action: pre_tanh.iter().map(|&u| squash(u)).collect(),
            pre_tanh,
            log_prob,
        })
    }

    /// Log-density of the squashed action `tanh(u)`, evaluated at its
    /// pre-squash value.
    pub fn log_prob_pre_tanh(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u, "pre-tanh value")?;
        let mut lp = 0.0;
        for i in 0..self.dim() {
            let z = (u[i] - self.mean[i]) / self.log_std[i].exp();
            let a = squash(u[i]);
            lp += -0.5 * z * z - self.log_std[i] - HALF_LN_2PI - (1.0 - a * a + TANH_EPS).ln();
        }
        Ok(lp)
    }

    /// Log-density of an action in `(-1, 1)^d`.
    pub fn log_prob(&self, action: &[f64]) -> Result<f64> {
        self.log_prob_pre_tanh(&Self::pre_tanh_of(action))
    }

    /// `atanh` of an action, with the action clipped just inside `(-1, 1)`.
    pub fn pre_tanh_of(action: &[f64]) -> Vec<f64> {
        action.iter().map(|&a| unsquash(a)).collect()
    }

    pub fn log_prob_partials(&self, u: &[f64]) -> Result<DensityPartials> {
        self.check_len(u, "pre-tanh value")?;
        let d = self.dim();
        let mut out = DensityPartials {
            d_pre_tanh: vec![0.0; d],
            d_mean: vec![0.0; d],
            d_log_std: vec![0.0; d],
        };
        for i in 0..d {
            let sigma = self.log_std[i].exp();
            let z = (u[i] - self.mean[i]) / sigma;
            let a = squash(u[i]);
            let one_minus = 1.0 - a * a;
            out.d_mean[i] = z / sigma;
            out.d_log_std[i] = z * z - 1.0;
            out.d_pre_tanh[i] = -z / sigma + 2.0 * a * one_minus / (one_minus + TANH_EPS);
        }
        Ok(out)
    }

    /// Pulls a gradient on the pre-squash sample back onto `(mean, log_std)`
    /// through `u = mean + exp(log_std) * noise`.
    pub fn reparam_backward(&self, noise: &[f64], d_pre_tanh: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d_mean = d_pre_tanh.to_vec();
        let d_log_std = d_pre_tanh
            .iter()
            .zip(&self.log_std)
            .zip(noise)
            .map(|((g, l), e)| g * l.exp() * e)
            .collect();
        (d_mean, d_log_std)
    }

    /// Packs `(d_mean, d_log_std)` into a gradient on the raw network output,
    /// zeroing components held by the log-std clamp.
    pub fn raw_gradient(&self, d_mean: &[f64], d_log_std: &[f64]) -> Vec<f64> {
        let mut raw = Vec::with_capacity(2 * self.dim());
        raw.extend_from_slice(d_mean);
        raw.extend(
            d_log_std
                .iter()
                .zip(&self.clamped)
                .map(|(&g, &c)| if c { 0.0 } else { g }),
        );
        raw
    }
}

/// `KL(p || q)` between the pre-squash diagonal Gaussians of two heads.
pub fn gaussian_kl(p: &SquashedGaussianHead, q: &SquashedGaussianHead) -> f64 {
    let mut kl = 0.0;
    for i in 0..p.dim() {
        let var_p = (2.0 * p.log_std[i]).exp();
        let var_q = (2.0 * q.log_std[i]).exp();
        let dm = p.mean[i] - q.mean[i];
        kl += q.log_std[i] - p.log_std[i] + (var_p + dm * dm) / (2.0 * var_q) - 0.5;
    }
    kl
}

/// Gradients of [`gaussian_kl`] with respect to `p`'s mean and log-std.
pub fn gaussian_kl_grads(p: &SquashedGaussianHead, q: &SquashedGaussianHead) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(p.dim());
    let mut d_log_std = Vec::with_capacity(p.dim());
    for i in 0..p.dim() {
        let var_p = (2.0 * p.log_std[i]).exp();
        let var_q = (2.0 * q.log_std[i]).exp();
        d_mean.push((p.mean[i] - q.mean[i]) / var_q);
        d_log_std.push(-1.0 + var_p / var_q);
    }
    (d_mean, d_log_std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn standard_head_at_zero_noise() {
        let head = SquashedGaussianHead::new(vec![0.0], vec![0.0]).unwrap();
        let s = head.sample(&[0.0]).unwrap();
        assert_eq!(s.action, vec![0.0]);
        // ln(1 + 1e-6) from the tanh correction is below the 1e-6 reporting precision.
        assert!((s.log_prob + 0.5 * (2.0 * PI).ln()).abs() < 1e-5);
        assert!((s.log_prob - (-0.9189385)).abs() < 1e-4);

        let head3 = SquashedGaussianHead::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        let s3 = head3.sample(&[0.0; 3]).unwrap();
        assert!((s3.log_prob + 1.5 * (2.0 * PI).ln()).abs() < 1e-5);
    }

    #[test]
    fn log_std_is_clamped() {
        let head = SquashedGaussianHead::from_raw(&[0.0, 0.0, 5.0, -40.0]).unwrap();
        assert_eq!(head.log_std, vec![LOG_STD_MAX, LOG_STD_MIN]);
        assert_eq!(head.raw_gradient(&[1.0, 1.0], &[1.0, 1.0]), vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn extreme_mean_still_gives_interior_action() {
        let head = SquashedGaussianHead::new(vec![80.0, -80.0], vec![LOG_STD_MAX; 2]).unwrap();
        let s = head.sample(&[3.0, -3.0]).unwrap();
        assert!(s.action.iter().all(|a| a.abs() < 1.0));
        assert!(s.log_prob.is_finite());
    }

    #[test]
    fn log_prob_of_action_matches_pre_tanh_route() {
        let head = SquashedGaussianHead::new(vec![0.3, -0.2], vec![-0.5, 0.1]).unwrap();
        let s = head.sample(&[0.7, -1.1]).unwrap();
        assert!((head.log_prob(&s.action).unwrap() - s.log_prob).abs() < 1e-9);
    }

    #[test]
    fn kl_of_identical_heads_is_zero() {
        let h = SquashedGaussianHead::new(vec![0.4, -1.0], vec![0.2, -0.3]).unwrap();
        assert_eq!(gaussian_kl(&h, &h), 0.0);
    }

    #[test]
    fn kl_unit_std_mean_shift() {
        let p = SquashedGaussianHead::new(vec![1.3], vec![0.0]).unwrap();
        let q = SquashedGaussianHead::new(vec![-0.4], vec![0.0]).unwrap();
        assert!((gaussian_kl(&p, &q) - 1.7f64.powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_noise_length_is_rejected() {
        let head = SquashedGaussianHead::new(vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert!(head.sample(&[0.0]).is_err());
    }
}
