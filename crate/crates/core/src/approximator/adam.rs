use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Adaptive-moment optimizer with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub(crate) fn from_parts(lr: f64, m: Vec<f64>, v: Vec<f64>, step: u64) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::invalid("moment arrays differ in length"));
        }
        Ok(Self {
            m,
            v,
            step,
            ..Self::new(0, lr)
        })
    }

    /// Applies one update. A non-finite gradient rejects the whole update and
    /// leaves both parameters and state untouched. An identically zero
    /// gradient only decays the moments.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::non_finite(format!("gradient component {i} ({})", grads[i])));
        }
        self.step += 1;
        let zero = grads.iter().all(|&g| g == 0.0);
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..grads.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            if !zero {
                let m_hat = self.m[i] / c1;
                let v_hat = self.v[i] / c2;
                params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut opt = Adam::new(1, 0.001);
        let mut p = [0.5];
        opt.update(&mut p, &[1.0]).unwrap();
        // m_hat = v_hat = 1, so the step is lr / (1 + eps).
        let expected = 0.5 - 0.001 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut opt = Adam::new(2, 0.01);
        let mut p = [1.0, -2.0];
        opt.update(&mut p, &[0.3, -0.1]).unwrap();
        let before = p;
        let m_before = opt.first_moment().to_vec();
        opt.update(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, before);
        for (a, b) in opt.first_moment().iter().zip(&m_before) {
            assert!((a - 0.9 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_identical_gradient_does_not_grow_step() {
        let mut opt = Adam::new(1, 0.001);
        let mut p = [0.0];
        opt.update(&mut p, &[0.7]).unwrap();
        let first = -p[0];
        let prev = p[0];
        opt.update(&mut p, &[0.7]).unwrap();
        let second = prev - p[0];
        assert!(second <= first * (1.0 + 1e-9));
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_side_effects() {
        let mut opt = Adam::new(2, 0.01);
        let mut p = [1.0, 1.0];
        let err = opt.update(&mut p, &[0.1, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        assert_eq!(p, [1.0, 1.0]);
        assert_eq!(opt.step_count(), 0);
        assert!(opt.first_moment().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn shape_mismatch_is_invalid_input() {
        let mut opt = Adam::new(2, 0.01);
        assert!(matches!(
            opt.update(&mut [0.0; 3], &[0.0; 3]),
            Err(Error::InvalidInput(_))
        ));
    }
}
