//! One-vs-rest squared-hinge SVM with an RBF kernel, trained in representer
//! form.
//!
//! Each class score is `f_k(x) = Σ_j α_kj k(x, x_j) + b_k` with
//! `k(x, x') = exp(-γ‖x − x'‖²)`. The bias is carried by the augmented kernel
//! `k + 1`, so `b_k = Σ_j α_kj`. Per class the objective is
//! `Σ_i max(0, 1 − t_i f(x_i))² + (λ/2) αᵀK'α`, minimized by a generalized
//! Newton iteration over the active set `{i : t_i f(x_i) < 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, solve_spd, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams<T> {
    pub gamma: T,
    /// Support points (training rows with a non-zero coefficient for some class).
    pub support: Vec<Vec<T>>,
    /// Training-set row index of each support point.
    pub support_indices: Vec<usize>,
    /// `alpha[k][j]`: coefficient of support point `j` for class `k`.
    pub alpha: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

pub(crate) fn rbf<T: Scalar>(gamma: T, a: &[T], b: &[T]) -> T {
    let d2: T = a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum();
    (-gamma * d2).exp()
}

/// `∂k(x, x') / ∂x = −2γ (x − x') k(x, x')`
pub(crate) fn rbf_grad<T: Scalar>(gamma: T, x: &[T], other: &[T]) -> Vec<T> {
    let k = rbf(gamma, x, other);
    let c = -T::lit(2.0) * gamma * k;
    x.iter().zip(other).map(|(&a, &b)| c * (a - b)).collect()
}

/// Augmented Gram matrix `K'_ij = k(x_i, x_j) + 1`.
pub(crate) fn gram<T: Scalar>(gamma: T, rows: &[Vec<T>]) -> Matrix<T> {
    let n = rows.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rbf(gamma, &rows[i], &rows[j]) + T::one();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Fitted coefficients of one binary sub-problem.
#[derive(Debug, Clone)]
pub(crate) struct BinarySolution<T> {
    pub alpha: Vec<T>,
    pub active: Vec<bool>,
}

fn class_objective<T: Scalar>(kp: &Matrix<T>, t: &[T], lambda: T, alpha: &[T]) -> T {
    let f = kp.matvec(alpha);
    let loss: T = f
        .iter()
        .zip(t)
        .map(|(&fi, &ti)| {
            let r = (T::one() - ti * fi).max(T::zero());
            r * r
        })
        .sum();
    loss + T::lit(0.5) * lambda * dot(alpha, &f)
}

/// `λα − 2 t∘r`; the objective gradient is `K'` times this vector.
pub(crate) fn stationarity_residual<T: Scalar>(
    kp: &Matrix<T>,
    t: &[T],
    lambda: T,
    alpha: &[T],
) -> Vec<T> {
    let f = kp.matvec(alpha);
    alpha
        .iter()
        .zip(&f)
        .zip(t)
        .map(|((&a, &fi), &ti)| lambda * a - T::lit(2.0) * ti * (T::one() - ti * fi).max(T::zero()))
        .collect()
}

pub(crate) fn solve_binary<T: Scalar>(
    kp: &Matrix<T>,
    t: &[T],
    lambda: T,
    max_iter: usize,
) -> Result<BinarySolution<T>> {
    let n = t.len();
    let mut alpha = vec![T::zero(); n];
    let mut active = vec![true; n];
    for _ in 0..max_iter {
        let idx: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        let mut sys = Matrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                sys[(a, b)] = T::lit(2.0) * kp[(i, j)];
            }
            sys[(a, a)] += lambda;
        }
        let rhs: Vec<T> = idx.iter().map(|&i| T::lit(2.0) * t[i]).collect();
        let sol = solve_spd(&sys, &rhs)?;
        let mut target = vec![T::zero(); n];
        for (&i, v) in idx.iter().zip(sol) {
            target[i] = v;
        }

        let f0 = class_objective(kp, t, lambda, &alpha);
        let dir: Vec<T> = target.iter().zip(&alpha).map(|(&a, &b)| a - b).collect();
        let mut step = T::one();
        let mut next = target.clone();
        for _ in 0..50 {
            if class_objective(kp, t, lambda, &next) <= f0 {
                break;
            }
            step *= T::lit(0.5);
            next = alpha
                .iter()
                .zip(&dir)
                .map(|(&a, &d)| a + step * d)
                .collect();
        }
        alpha = next;
        let f = kp.matvec(&alpha);
        let new_active: Vec<bool> = f
            .iter()
            .zip(t)
            .map(|(&fi, &ti)| ti * fi < T::one())
            .collect();
        if step == T::one() && new_active == active {
            return Ok(BinarySolution { alpha, active });
        }
        active = new_active;
    }
    let grad = kp.matvec(&stationarity_residual(kp, t, lambda, &alpha));
    Err(Error::Convergence {
        iterations: max_iter,
        grad_norm: norm2(&grad).as_f64(),
    })
}

pub(crate) fn class_targets<T: Scalar>(labels: &[usize], k: usize) -> Vec<T> {
    labels
        .iter()
        .map(|&y| if y == k { T::one() } else { -T::one() })
        .collect()
}

pub(crate) fn fit_rbf<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[usize],
    n_classes: usize,
    lambda: T,
    gamma: T,
) -> Result<KernelParams<T>> {
    let kp = gram(gamma, rows);
    let mut full_alpha = Vec::with_capacity(n_classes);
    for k in 0..n_classes {
        let t = class_targets(labels, k);
        full_alpha.push(solve_binary(&kp, &t, lambda, 100)?.alpha);
    }
    let support_indices: Vec<usize> = (0..rows.len())
        .filter(|&j| full_alpha.iter().any(|a| a[j] != T::zero()))
        .collect();
    let alpha: Vec<Vec<T>> = full_alpha
        .iter()
        .map(|a| support_indices.iter().map(|&j| a[j]).collect())
        .collect();
    let bias = alpha.iter().map(|a| a.iter().copied().sum()).collect();
    Ok(KernelParams {
        gamma,
        support: support_indices.iter().map(|&j| rows[j].clone()).collect(),
        support_indices,
        alpha,
        bias,
    })
}

impl<T: Scalar> KernelParams<T> {
    pub fn scores(&self, x: &[T]) -> Vec<T> {
        let k: Vec<T> = self.support.iter().map(|s| rbf(self.gamma, x, s)).collect();
        self.alpha
            .iter()
            .zip(&self.bias)
            .map(|(a, &b)| dot(a, &k) + b)
            .collect()
    }

    pub fn weighted_gradient(&self, x: &[T], weights: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        for (j, s) in self.support.iter().enumerate() {
            let c: T = self.alpha.iter().zip(weights).map(|(a, &w)| w * a[j]).sum();
            if c == T::zero() {
                continue;
            }
            for (o, g) in out.iter_mut().zip(rbf_grad(self.gamma, x, s)) {
                *o += c * g;
            }
        }
        out
    }

    /// Norm of the objective gradient with respect to the coefficients of
    /// every training point, at the fitted solution.
    pub(crate) fn stationarity(&self, rows: &[Vec<T>], labels: &[usize], lambda: T) -> T {
        let kp = gram(self.gamma, rows);
        let mut total = T::zero();
        for (k, a) in self.alpha.iter().enumerate() {
            let mut full = vec![T::zero(); rows.len()];
            for (&i, &v) in self.support_indices.iter().zip(a) {
                full[i] = v;
            }
            let t = class_targets(labels, k);
            let g = kp.matvec(&stationarity_residual(&kp, &t, lambda, &full));
            total += dot(&g, &g);
        }
        total.sqrt()
    }
}
