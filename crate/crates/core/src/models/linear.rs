//! Multiclass linear models trained by Newton's method on an ℓ2-regularized
//! convex loss: multinomial logistic regression and one-vs-rest squared hinge.
//!
//! Parameters are flattened per class as `[w_k (d entries), b_k]`, so the
//! parameter vector has `K (d + 1)` entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, solve_spd, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LinearLoss {
    Logistic,
    SquaredHinge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams<T> {
    /// One weight row per class.
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearParams<T> {
    pub(crate) fn from_theta(theta: &[T], n_classes: usize, n_features: usize) -> Self {
        let stride = n_features + 1;
        Self {
            weights: (0..n_classes)
                .map(|k| theta[k * stride..k * stride + n_features].to_vec())
                .collect(),
            bias: (0..n_classes)
                .map(|k| theta[k * stride + n_features])
                .collect(),
        }
    }

    pub(crate) fn to_theta(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.weights.len() * (self.weights[0].len() + 1));
        for (w, &b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            out.push(b);
        }
        out
    }

    pub(crate) fn scores(&self, x: &[T]) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| dot(w, x) + b)
            .collect()
    }
}

/// Samples with per-sample weights, as used by weighted (re)training.
#[derive(Debug, Clone)]
pub(crate) struct TrainingSet<T> {
    pub rows: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    pub weights: Vec<T>,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn uniform(rows: Vec<Vec<T>>, labels: Vec<usize>) -> Self {
        let weights = vec![T::one(); labels.len()];
        Self {
            rows,
            labels,
            weights,
        }
    }
}

pub(crate) fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let e: Vec<T> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub(crate) fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let m = z.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    m + z.iter().map(|&v| (v - m).exp()).sum::<T>().ln()
}

/// The regularized training objective
/// `J(θ) = Σ_i s_i ℓ(x_i, y_i; θ) + (λ/2)‖θ‖²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LinearObjective<T> {
    pub loss: LinearLoss,
    pub n_classes: usize,
    pub n_features: usize,
    pub lambda: T,
}

impl<T: Scalar> LinearObjective<T> {
    pub fn n_params(&self) -> usize {
        self.n_classes * (self.n_features + 1)
    }

    fn stride(&self) -> usize {
        self.n_features + 1
    }

    pub fn scores(&self, theta: &[T], x: &[T]) -> Vec<T> {
        let s = self.stride();
        (0..self.n_classes)
            .map(|k| {
                dot(&theta[k * s..k * s + self.n_features], x) + theta[k * s + self.n_features]
            })
            .collect()
    }

    fn sign(y: usize, k: usize) -> T {
        if y == k {
            T::one()
        } else {
            -T::one()
        }
    }

    /// Unregularized loss of one sample.
    pub fn sample_loss(&self, theta: &[T], x: &[T], y: usize) -> T {
        let z = self.scores(theta, x);
        match self.loss {
            LinearLoss::Logistic => log_sum_exp(&z) - z[y],
            LinearLoss::SquaredHinge => z
                .iter()
                .enumerate()
                .map(|(k, &zk)| {
                    let r = (T::one() - Self::sign(y, k) * zk).max(T::zero());
                    r * r
                })
                .sum(),
        }
    }

    /// Derivative of the sample loss with respect to each class score.
    fn score_residual(&self, z: &[T], y: usize) -> Vec<T> {
        match self.loss {
            LinearLoss::Logistic => {
                let mut p = softmax(z);
                p[y] -= T::one();
                p
            }
            LinearLoss::SquaredHinge => z
                .iter()
                .enumerate()
                .map(|(k, &zk)| {
                    let t = Self::sign(y, k);
                    let r = (T::one() - t * zk).max(T::zero());
                    -T::lit(2.0) * t * r
                })
                .collect(),
        }
    }

    /// Gradient of the sample loss with respect to θ.
    pub fn sample_grad(&self, theta: &[T], x: &[T], y: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_params()];
        self.add_sample_grad(theta, x, y, T::one(), &mut out);
        out
    }

    fn add_sample_grad(&self, theta: &[T], x: &[T], y: usize, s: T, out: &mut [T]) {
        let z = self.scores(theta, x);
        let r = self.score_residual(&z, y);
        let st = self.stride();
        for (k, &rk) in r.iter().enumerate() {
            let c = s * rk;
            if c == T::zero() {
                continue;
            }
            let block = &mut out[k * st..(k + 1) * st];
            for (o, &xj) in block.iter_mut().zip(x) {
                *o += c * xj;
            }
            block[self.n_features] += c;
        }
    }

    fn add_sample_hess(&self, theta: &[T], x: &[T], y: usize, s: T, h: &mut Matrix<T>) {
        let z = self.scores(theta, x);
        let st = self.stride();
        let mut phi = x.to_vec();
        phi.push(T::one());
        match self.loss {
            LinearLoss::Logistic => {
                let p = softmax(&z);
                for k in 0..self.n_classes {
                    for l in 0..self.n_classes {
                        let skl = if k == l {
                            p[k] - p[k] * p[k]
                        } else {
                            -p[k] * p[l]
                        };
                        h.add_outer_block(k * st, l * st, s * skl, &phi, &phi);
                    }
                }
            }
            LinearLoss::SquaredHinge => {
                for (k, &zk) in z.iter().enumerate() {
                    if T::one() - Self::sign(y, k) * zk > T::zero() {
                        h.add_outer_block(k * st, k * st, s * T::lit(2.0), &phi, &phi);
                    }
                }
            }
        }
    }

    /// `∂(∇_θ ℓ(x, y; θ)) / ∂x`, a `n_params × d` matrix.
    pub fn sample_mixed(&self, theta: &[T], x: &[T], y: usize) -> Matrix<T> {
        let d = self.n_features;
        let st = self.stride();
        let z = self.scores(theta, x);
        let r = self.score_residual(&z, y);
        let w = |l: usize| &theta[l * st..l * st + d];
        let mut m = Matrix::zeros(self.n_params(), d);
        // jac[k] = ∂r_k/∂x
        let jac: Vec<Vec<T>> = match self.loss {
            LinearLoss::Logistic => {
                let p = softmax(&z);
                (0..self.n_classes)
                    .map(|k| {
                        let mut row = vec![T::zero(); d];
                        for l in 0..self.n_classes {
                            let skl = if k == l {
                                p[k] - p[k] * p[k]
                            } else {
                                -p[k] * p[l]
                            };
                            for (o, &wl) in row.iter_mut().zip(w(l)) {
                                *o += skl * wl;
                            }
                        }
                        row
                    })
                    .collect()
            }
            LinearLoss::SquaredHinge => (0..self.n_classes)
                .map(|k| {
                    let t = Self::sign(y, k);
                    if T::one() - t * z[k] > T::zero() {
                        w(k).iter().map(|&v| T::lit(2.0) * v).collect()
                    } else {
                        vec![T::zero(); d]
                    }
                })
                .collect(),
        };
        for k in 0..self.n_classes {
            for j in 0..d {
                let row = m.row_mut(k * st + j);
                for (mm, &jk) in row.iter_mut().zip(&jac[k]) {
                    *mm = jk * x[j];
                }
                row[j] += r[k];
            }
            m.row_mut(k * st + d).copy_from_slice(&jac[k]);
        }
        m
    }

    pub fn objective(&self, theta: &[T], set: &TrainingSet<T>) -> T {
        let data: T = set
            .rows
            .iter()
            .zip(&set.labels)
            .zip(&set.weights)
            .map(|((x, &y), &s)| s * self.sample_loss(theta, x, y))
            .sum();
        data + T::lit(0.5) * self.lambda * dot(theta, theta)
    }

    pub fn gradient(&self, theta: &[T], set: &TrainingSet<T>) -> Vec<T> {
        let mut g: Vec<T> = theta.iter().map(|&t| self.lambda * t).collect();
        for ((x, &y), &s) in set.rows.iter().zip(&set.labels).zip(&set.weights) {
            self.add_sample_grad(theta, x, y, s, &mut g);
        }
        g
    }

    pub fn hessian(&self, theta: &[T], set: &TrainingSet<T>) -> Matrix<T> {
        let mut h = Matrix::identity(self.n_params());
        for v in h.data.iter_mut() {
            *v *= self.lambda;
        }
        for ((x, &y), &s) in set.rows.iter().zip(&set.labels).zip(&set.weights) {
            self.add_sample_hess(theta, x, y, s, &mut h);
        }
        h
    }

    /// Damped Newton iterations from `theta0` until `‖∇J‖₂ ≤ tol`.
    pub fn minimize(
        &self,
        theta0: Vec<T>,
        set: &TrainingSet<T>,
        tol: T,
        max_iter: usize,
    ) -> Result<Vec<T>> {
        let mut theta = theta0;
        let mut g = self.gradient(&theta, set);
        let mut gnorm = norm2(&g);
        for _ in 0..max_iter {
            if gnorm <= tol {
                return Ok(theta);
            }
            let h = self.hessian(&theta, set);
            let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
            let step = solve_spd(&h, &neg_g)?;
            let f0 = self.objective(&theta, set);
            let slope = dot(&g, &step);
            let full: Vec<T> = theta.iter().zip(&step).map(|(&a, &b)| a + b).collect();
            let f_full = self.objective(&full, set);
            let g_full = self.gradient(&full, set);
            let gn_full = norm2(&g_full);
            // once J is flat to rounding, Armijo alone cannot rank candidates
            let flat = T::epsilon() * T::lit(16.0) * (f0.abs() + T::one());
            let (cand, g_new, gn_new) = if f_full <= f0 + T::lit(1e-4) * slope || (f_full <= f0 + flat && gn_full < gnorm) {
                (full, g_full, gn_full)
            } else {
                let mut t = T::lit(0.5);
                let mut accepted = None;
                for _ in 0..60 {
                    let cand: Vec<T> = theta.iter().zip(&step).map(|(&a, &b)| a + t * b).collect();
                    if self.objective(&cand, set) <= f0 + T::lit(1e-4) * t * slope {
                        accepted = Some(cand);
                        break;
                    }
                    t *= T::lit(0.5);
                }
                let Some(cand) = accepted else { break };
                let g_new = self.gradient(&cand, set);
                let gn_new = norm2(&g_new);
                (cand, g_new, gn_new)
            };
            theta = cand;
            g = g_new;
            gnorm = gn_new;
        }
        if gnorm <= tol {
            Ok(theta)
        } else {
            Err(Error::Convergence {
                iterations: max_iter,
                grad_norm: gnorm.as_f64(),
            })
        }
    }
}
