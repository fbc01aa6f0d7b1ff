//! Small dense feed-forward network with tanh hidden layers and a linear
//! output layer, trained by hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Uniform init in `+-1/sqrt(n_in)`.
    fn init(n_in: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        Self {
            n_in,
            n_out,
            weights: (0..n_in * n_out).map(|_| rng.random_range(-bound..bound)).collect(),
            bias: (0..n_out).map(|_| rng.random_range(-bound..bound)).collect(),
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }

    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer activations from a forward pass; `acts[0]` is the input.
pub struct ForwardCache {
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty")
    }
}

impl Mlp {
    /// `dims = [input, hidden..., output]`.
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2);
        let layers = dims.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect();
        Self { layers }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().expect("non-empty").n_out
    }

    /// Checks that consecutive layers chain and buffers have declared sizes.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Malformed("network has no layers".into()));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(Error::Malformed(format!("layer {k} buffer sizes disagree with its shape")));
            }
            if k > 0 && self.layers[k - 1].n_out != l.n_in {
                return Err(Error::Malformed(format!("layer {k} input does not match previous output")));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::Malformed(format!("layer {k} has non-finite parameters")));
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).acts.pop().expect("non-empty")
    }

    pub fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.n_out);
            layer.apply(&acts[k], &mut out);
            if k < last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        ForwardCache { acts }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    /// Parameters flattened layer by layer: weights then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[k..k + nw]);
            k += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[k..k + nb]);
            k += nb;
        }
    }

    /// Adds `dL/dparams` to `grad` (flat layout as [`params`](Mlp::params))
    /// given `dL/doutput` for one sample.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut [f64]) {
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |acc, l| {
                let start = *acc;
                *acc += l.n_params();
                Some(start)
            })
            .collect();
        let mut delta = d_out.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = &cache.acts[k];
            let base = offsets[k];
            for o in 0..layer.n_out {
                let g = delta[o];
                if g == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * layer.n_in..base + (o + 1) * layer.n_in];
                for (r, x) in row.iter_mut().zip(input) {
                    *r += g * x;
                }
                grad[base + layer.weights.len() + o] += g;
            }
            if k == 0 {
                break;
            }
            // propagate through the weights, then through tanh of layer k-1
            let mut prev = vec![0.0; layer.n_in];
            for o in 0..layer.n_out {
                let g = delta[o];
                let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += g * w;
                }
            }
            for (p, a) in prev.iter_mut().zip(input) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `logistic(logit)` against a soft label.
pub fn bce_with_logit(logit: f64, target: f64) -> f64 {
    softplus(logit) - target * logit
}

/// Huber loss with threshold `delta` and its derivative in the residual.
pub fn huber(residual: f64, delta: f64) -> (f64, f64) {
    if residual.abs() <= delta {
        (0.5 * residual * residual, residual)
    } else {
        (delta * (residual.abs() - 0.5 * delta), delta * residual.signum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(&[3, 5, 2], &mut rng);
        let p = net.params();
        assert_eq!(p.len(), 3 * 5 + 5 + 5 * 2 + 2);
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        net.set_params(&shifted);
        assert_eq!(net.params(), shifted);
    }

    #[test]
    fn init_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[16, 4], &mut rng);
        assert!(net.layers[0].weights.iter().all(|w| w.abs() <= 0.25));
    }

    #[test]
    fn losses() {
        assert!((bce_with_logit(0.0, 0.5) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(bce_with_logit(800.0, 1.0).abs() < 1e-12);
        assert!((bce_with_logit(-800.0, 1.0) - 800.0).abs() < 1e-9);
        assert_eq!(huber(0.5, 1.0), (0.125, 0.5));
        assert_eq!(huber(-3.0, 1.0), (2.5, -1.0));
        assert!((logistic(0.0) - 0.5).abs() < 1e-15);
        assert!(logistic(-1000.0) >= 0.0 && logistic(1000.0) <= 1.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::new(&[4, 6, 5, 2], &mut rng);
        let x = [0.3, -1.2, 0.8, 0.05];
        let weights_out = [0.7, -1.3];
        // L = sum_k c_k * out_k
        let loss = |n: &Mlp| n.forward(&x).iter().zip(&weights_out).map(|(o, c)| o * c).sum::<f64>();
        let mut grad = vec![0.0; net.n_params()];
        net.backward(&net.forward_cached(&x), &weights_out, &mut grad);
        let p = net.params();
        for k in 0..p.len() {
            let h = 1e-6;
            let mut plus = net.clone();
            let mut pp = p.clone();
            pp[k] += h;
            plus.set_params(&pp);
            let mut minus = net.clone();
            pp[k] -= 2.0 * h;
            minus.set_params(&pp);
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let denom = fd.abs().max(grad[k].abs()).max(1e-8);
            assert!((fd - grad[k]).abs() / denom < 1e-5, "param {k}: fd {fd} vs {}", grad[k]);
        }
    }
}
