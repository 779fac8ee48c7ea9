use serde::{Deserialize, Serialize};

use super::linear::{log_sum_exp, softmax};
use super::Classifier;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    CrossEntropy,
    CwLogitDiff,
}

/// Attack loss on the classifier scores.
///
/// `CwLogitDiff` with target `t` is `max(max_{i≠t} z_i − z_t, −κ)`; values at or
/// below zero mean the target class wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec<T> {
    pub kind: LossKind,
    #[serde(default)]
    pub target_label: Option<usize>,
    #[serde(default)]
    pub kappa: T,
}

impl<T: Scalar> LossSpec<T> {
    pub fn cross_entropy() -> Self {
        Self {
            kind: LossKind::CrossEntropy,
            target_label: None,
            kappa: T::zero(),
        }
    }

    pub fn targeted_cross_entropy(target: usize) -> Self {
        Self {
            kind: LossKind::CrossEntropy,
            target_label: Some(target),
            kappa: T::zero(),
        }
    }

    pub fn cw(target: usize, kappa: T) -> Self {
        Self {
            kind: LossKind::CwLogitDiff,
            target_label: Some(target),
            kappa,
        }
    }

    pub fn is_targeted(&self) -> bool {
        self.target_label.is_some()
    }

    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if !self.kappa.is_finite() || self.kappa < T::zero() {
            return Err(Error::InvalidSpec(
                "kappa must be finite and non-negative".into(),
            ));
        }
        match (self.kind, self.target_label) {
            (LossKind::CwLogitDiff, None) => Err(Error::InvalidSpec(
                "cw-logit-diff loss needs a target_label".into(),
            )),
            (_, Some(t)) if t >= n_classes => Err(Error::InvalidSpec(format!(
                "target_label {t} out of range for {n_classes} classes"
            ))),
            _ => Ok(()),
        }
    }
}

/// Loss value and, when `with_gradient`, the weights `∂L/∂z` over class scores.
fn loss_on_scores<T: Scalar>(z: &[T], y: usize, spec: &LossSpec<T>) -> (T, Vec<T>) {
    match spec.kind {
        LossKind::CrossEntropy => {
            let label = spec.target_label.unwrap_or(y);
            let mut w = softmax(z);
            w[label] -= T::one();
            (log_sum_exp(z) - z[label], w)
        }
        LossKind::CwLogitDiff => {
            let t = spec.target_label.expect("validated");
            let mut rival = None;
            for (i, &zi) in z.iter().enumerate() {
                if i != t && rival.is_none_or(|r: usize| zi > z[r]) {
                    rival = Some(i);
                }
            }
            let rival = rival.expect("at least two classes");
            let diff = z[rival] - z[t];
            let mut w = vec![T::zero(); z.len()];
            if diff > -spec.kappa {
                w[rival] = T::one();
                w[t] = -T::one();
                (diff, w)
            } else {
                (-spec.kappa, w)
            }
        }
    }
}

/// Loss value only; works on non-differentiable models.
pub fn loss_value<T: Scalar, C: Classifier<T> + ?Sized>(
    m: &C,
    x: &[T],
    y: usize,
    spec: &LossSpec<T>,
) -> Result<T> {
    spec.validate(m.n_classes())?;
    let z = m.decision_scores(x)?;
    Ok(loss_on_scores(&z, y, spec).0)
}

/// Loss value and its input gradient (a subgradient at CW kinks).
pub fn loss_value_and_gradient<T: Scalar, C: Classifier<T> + ?Sized>(
    m: &C,
    x: &[T],
    y: usize,
    spec: &LossSpec<T>,
) -> Result<(T, Vec<T>)> {
    spec.validate(m.n_classes())?;
    let z = m.decision_scores(x)?;
    let (v, w) = loss_on_scores(&z, y, spec);
    Ok((v, m.weighted_score_gradient(x, &w)?))
}
