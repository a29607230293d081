use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    /// Smooth rectifier, `ln(1 + e^x)`.
    Softplus,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Softplus => {
                if x > 30.0 {
                    x
                } else {
                    x.exp().ln_1p()
                }
            }
        }
    }

    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softplus => 1.0 / (1.0 + (-pre).exp()),
        }
    }
}

/// Fully connected network: rectifier hidden layers, identity output.
///
/// Parameters live in one flat vector, layer by layer, each layer storing its
/// `n_out x n_in` weight matrix row-major followed by its `n_out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layer_sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Intermediate values recorded by [`DenseNet::forward_tape`].
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.pre.last().expect("tape has at least one layer")
    }

    /// Smallest absolute hidden pre-activation, used to keep finite-difference
    /// probes away from rectifier kinks.
    pub fn min_abs_hidden_preactivation(&self) -> f64 {
        let n = self.pre.len();
        self.pre[..n - 1]
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

fn layer_offsets(layer_sizes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(layer_sizes.len());
    let mut acc = 0;
    for w in layer_sizes.windows(2) {
        offsets.push(acc);
        acc += (w[0] + 1) * w[1];
    }
    offsets.push(acc);
    offsets
}

impl DenseNet {
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&n| n == 0) {
            return Err(Error::invalid(format!(
                "layer sizes must list at least two positive widths, got {layer_sizes:?}"
            )));
        }
        let offsets = layer_offsets(layer_sizes);
        let total = *offsets.last().unwrap();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            params: vec![0.0; total],
            offsets,
        })
    }

    /// Uniform initialization in `±1/sqrt(fan_in)` for weights and biases.
    pub fn new<R: Rng + ?Sized>(layer_sizes: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, activation)?;
        for l in 0..net.num_layers() {
            let bound = 1.0 / (net.layer_sizes[l] as f64).sqrt();
            let (start, end) = (net.offsets[l], net.offsets[l + 1]);
            for p in &mut net.params[start..end] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn from_params(layer_sizes: &[usize], activation: Activation, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, activation)?;
        if params.len() != net.params.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::non_finite("network parameter"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weight_index(&self, layer: usize, out: usize, inp: usize) -> usize {
        self.offsets[layer] + out * self.layer_sizes[layer] + inp
    }

    fn bias_index(&self, layer: usize, out: usize) -> usize {
        self.offsets[layer] + self.layer_sizes[layer] * self.layer_sizes[layer + 1] + out
    }

    pub fn weight(&self, layer: usize, out: usize, inp: usize) -> f64 {
        self.params[self.weight_index(layer, out, inp)]
    }

    pub fn set_weight(&mut self, layer: usize, out: usize, inp: usize, value: f64) {
        let i = self.weight_index(layer, out, inp);
        self.params[i] = value;
    }

    pub fn bias(&self, layer: usize, out: usize) -> f64 {
        self.params[self.bias_index(layer, out)]
    }

    pub fn set_bias(&mut self, layer: usize, out: usize, value: f64) {
        let i = self.bias_index(layer, out);
        self.params[i] = value;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "network expects input of length {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    fn affine(&self, layer: usize, x: &[f64], out: &mut Vec<f64>) {
        let n_in = self.layer_sizes[layer];
        let n_out = self.layer_sizes[layer + 1];
        let base = self.offsets[layer];
        let weights = &self.params[base..base + n_in * n_out];
        let biases = &self.params[base + n_in * n_out..base + (n_in + 1) * n_out];
        out.clear();
        out.extend(weights.chunks_exact(n_in).zip(biases).map(|(row, b)| {
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.num_layers() - 1;
        for l in 0..=last {
            self.affine(l, &cur, &mut next);
            if l < last {
                for v in next.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn forward_tape(&self, x: &[f64]) -> Result<Tape> {
        self.check_input(x)?;
        let layers = self.num_layers();
        let mut inputs = Vec::with_capacity(layers);
        let mut pre = Vec::with_capacity(layers);
        inputs.push(x.to_vec());
        for l in 0..layers {
            let mut z = Vec::new();
            self.affine(l, &inputs[l], &mut z);
            if l + 1 < layers {
                inputs.push(z.iter().map(|&v| self.activation.apply(v)).collect());
            }
            pre.push(z);
        }
        Ok(Tape { inputs, pre })
    }

    fn check_tape(&self, tape: &Tape, upstream: &[f64]) -> Result<()> {
        if tape.inputs.len() != self.num_layers() || tape.inputs[0].len() != self.input_dim() {
            return Err(Error::invalid("tape was not recorded by a network of this shape"));
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::invalid(format!(
                "upstream gradient has length {}, network output is {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// Reverse pass. Accumulates `d<upstream, f(x)>/dparams` into `grads`
    /// (when given) and returns the gradient with respect to the input.
    fn reverse(&self, tape: &Tape, upstream: &[f64], mut grads: Option<&mut [f64]>) -> Vec<f64> {
        let mut delta = upstream.to_vec();
        for l in (0..self.num_layers()).rev() {
            let n_in = self.layer_sizes[l];
            let n_out = self.layer_sizes[l + 1];
            let base = self.offsets[l];
            let input = &tape.inputs[l];
            if let Some(g) = grads.as_deref_mut() {
                let (gw, gb) = g[base..base + (n_in + 1) * n_out].split_at_mut(n_in * n_out);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (gwi, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                        *gwi += d * xi;
                    }
                }
            }
            let weights = &self.params[base..base + n_in * n_out];
            let mut dx = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (dxi, w) in dx.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                    *dxi += d * w;
                }
            }
            if l > 0 {
                for (v, &z) in dx.iter_mut().zip(&tape.pre[l - 1]) {
                    *v *= self.activation.derivative(z);
                }
            }
            delta = dx;
        }
        delta
    }

    /// Accumulating reverse pass over a recorded tape.
    pub fn backprop(&self, tape: &Tape, upstream: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        self.check_tape(tape, upstream)?;
        if grads.len() != self.param_count() {
            return Err(Error::invalid("gradient buffer does not match parameter count"));
        }
        Ok(self.reverse(tape, upstream, Some(grads)))
    }

    /// Input gradient only; parameter gradients are not formed.
    pub fn input_gradient(&self, tape: &Tape, upstream: &[f64]) -> Result<Vec<f64>> {
        self.check_tape(tape, upstream)?;
        Ok(self.reverse(tape, upstream, None))
    }

    /// Exact gradients of `<upstream, forward(x)>` with respect to the
    /// parameters and to `x`.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let tape = self.forward_tape(x)?;
        let mut grads = vec![0.0; self.param_count()];
        let dx = self.backprop(&tape, upstream, &mut grads)?;
        Ok((grads, dx))
    }

    /// `self <- rate * source + (1 - rate) * self`.
    pub fn blend_from(&mut self, source: &DenseNet, rate: f64) -> Result<()> {
        if source.layer_sizes != self.layer_sizes {
            return Err(Error::invalid("cannot blend networks of different shapes"));
        }
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            *t = rate * s + (1.0 - rate) * *t;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_count_matches_layer_formula() {
        let net = DenseNet::zeros(&[5, 7, 3], Activation::Relu).unwrap();
        assert_eq!(net.param_count(), 6 * 7 + 8 * 3);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut net = DenseNet::zeros(&[2, 2], Activation::Relu).unwrap();
        net.set_weight(0, 0, 0, 1.0);
        net.set_weight(0, 1, 1, 1.0);
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weights_return_bias() {
        let mut net = DenseNet::zeros(&[3, 4, 2], Activation::Relu).unwrap();
        net.set_bias(1, 0, 0.25);
        net.set_bias(1, 1, -1.5);
        assert_eq!(net.forward(&[9.0, -4.0, 2.0]).unwrap(), vec![0.25, -1.5]);
    }

    #[test]
    fn rejects_wrong_input_length() {
        let net = DenseNet::zeros(&[3, 1], Activation::Relu).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::InvalidInput(_))));
        assert!(net.backward(&[1.0, 2.0, 3.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn linear_unit_gradients_are_analytic() {
        let mut net = DenseNet::zeros(&[1, 1], Activation::Relu).unwrap();
        net.set_weight(0, 0, 0, 1.7);
        net.set_bias(0, 0, -0.3);
        let (g, dx) = net.backward(&[0.6], &[1.0]).unwrap();
        assert_eq!(g, vec![0.6, 1.0]);
        assert_eq!(dx, vec![1.7]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::new(&[3, 8, 2], Activation::Relu, &mut rng).unwrap();
        let (g, dx) = net.backward(&[0.1, -0.2, 0.3], &[0.0, 0.0]).unwrap();
        assert!(g.iter().chain(&dx).all(|&v| v == 0.0));
    }

    #[test]
    fn tape_output_equals_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = DenseNet::new(&[4, 6, 6, 3], Activation::Softplus, &mut rng).unwrap();
        let x = [0.3, -1.0, 0.5, 2.0];
        assert_eq!(net.forward_tape(&x).unwrap().output(), &net.forward(&x).unwrap()[..]);
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = DenseNet::new(&[16, 4], Activation::Relu, &mut rng).unwrap();
        assert!(net.params().iter().all(|p| p.abs() <= 0.25));
    }
}
