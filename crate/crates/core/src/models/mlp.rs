//! Fully connected network with tanh hidden layers and a linear logit head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::softmax;
use crate::linalg::dot;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer<T> {
    /// `weights[o][i]`: output unit `o`, input unit `i`.
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    fn apply(&self, x: &[T]) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| dot(w, x) + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams<T> {
    /// Hidden layers followed by the output layer.
    pub layers: Vec<DenseLayer<T>>,
}

impl<T: Scalar> MlpParams<T> {
    /// Xavier-uniform weights, zero biases.
    pub(crate) fn init(sizes: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                DenseLayer {
                    weights: (0..fan_out)
                        .map(|_| (0..fan_in).map(|_| T::lit(rng.gen_range(-a..a))).collect())
                        .collect(),
                    bias: vec![T::zero(); fan_out],
                }
            })
            .collect();
        Self { layers }
    }

    /// Activations of every layer, input first, logits last.
    fn forward(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut a = layer.apply(acts.last().unwrap());
            if l < last {
                a.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(a);
        }
        acts
    }

    pub fn scores(&self, x: &[T]) -> Vec<T> {
        self.forward(x).pop().unwrap()
    }

    /// Backpropagates `upstream` (∂L/∂logits) and returns ∂L/∂x, optionally
    /// accumulating parameter gradients into `grads`.
    fn backward(
        &self,
        acts: &[Vec<T>],
        upstream: &[T],
        mut grads: Option<&mut [DenseLayer<T>]>,
    ) -> Vec<T> {
        let mut delta = upstream.to_vec();
        for l in (0..self.layers.len()).rev() {
            let input = &acts[l];
            if let Some(g) = grads.as_deref_mut() {
                for (o, &d) in delta.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    for (gw, &a) in g[l].weights[o].iter_mut().zip(input) {
                        *gw += d * a;
                    }
                    g[l].bias[o] += d;
                }
            }
            let mut prev = vec![T::zero(); input.len()];
            for (w, &d) in self.layers[l].weights.iter().zip(&delta) {
                if d == T::zero() {
                    continue;
                }
                for (p, &wi) in prev.iter_mut().zip(w) {
                    *p += d * wi;
                }
            }
            if l > 0 {
                // input to this layer is tanh output a; tanh' = 1 − a²
                for (p, &a) in prev.iter_mut().zip(input) {
                    *p *= T::one() - a * a;
                }
            }
            delta = prev;
        }
        delta
    }

    pub fn weighted_gradient(&self, x: &[T], weights: &[T]) -> Vec<T> {
        let acts = self.forward(x);
        self.backward(&acts, weights, None)
    }

    fn zeros_like(&self) -> Vec<DenseLayer<T>> {
        self.layers
            .iter()
            .map(|l| DenseLayer {
                weights: l.weights.iter().map(|w| vec![T::zero(); w.len()]).collect(),
                bias: vec![T::zero(); l.bias.len()],
            })
            .collect()
    }

    /// Mean cross-entropy plus `(λ/2)‖W‖²` over all weight matrices.
    #[cfg(test)]
    pub(crate) fn training_loss(&self, rows: &[Vec<T>], labels: &[usize], lambda: T) -> T {
        let n = T::from_usize_lossy(rows.len());
        let ce: T = rows
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let z = self.scores(x);
                super::linear::log_sum_exp(&z) - z[y]
            })
            .sum();
        let reg: T = self
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().flatten())
            .map(|&w| w * w)
            .sum();
        ce / n + T::lit(0.5) * lambda * reg
    }

    /// Full-batch gradient descent for a fixed number of epochs.
    pub(crate) fn train(
        &mut self,
        rows: &[Vec<T>],
        labels: &[usize],
        lambda: T,
        lr: T,
        epochs: usize,
    ) {
        let inv_n = T::one() / T::from_usize_lossy(rows.len());
        for _ in 0..epochs {
            let mut grads = self.zeros_like();
            for (x, &y) in rows.iter().zip(labels) {
                let acts = self.forward(x);
                let mut up = softmax(acts.last().unwrap());
                up[y] -= T::one();
                up.iter_mut().for_each(|v| *v *= inv_n);
                self.backward(&acts, &up, Some(&mut grads));
            }
            for (layer, g) in self.layers.iter_mut().zip(&grads) {
                for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                    for (wi, &gi) in w.iter_mut().zip(gw) {
                        *wi -= lr * (gi + lambda * *wi);
                    }
                }
                for (b, &gb) in layer.bias.iter_mut().zip(&g.bias) {
                    *b -= lr * gb;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_gradient_matches_finite_differences() {
        let net = MlpParams::<f64>::init(&[3, 5, 4, 2], 11);
        let x = [0.2, -0.4, 0.9];
        let w = [0.7, -1.3];
        let g = net.weighted_gradient(&x, &w);
        for j in 0..3 {
            let (mut p, mut m) = (x, x);
            p[j] += 1e-6;
            m[j] -= 1e-6;
            let f = |v: &[f64]| dot(&net.scores(v), &w);
            let fd = (f(&p) - f(&m)) / 2e-6;
            assert!((g[j] - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn training_decreases_loss() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 / 10.0) - 1.0, ((i * 7) % 5) as f64 / 5.0])
            .collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] > 0.0)).collect();
        let mut net = MlpParams::<f64>::init(&[2, 6, 2], 0);
        let before = net.training_loss(&rows, &labels, 1e-3);
        net.train(&rows, &labels, 1e-3, 0.5, 200);
        assert!(net.training_loss(&rows, &labels, 1e-3) < before);
    }
}
