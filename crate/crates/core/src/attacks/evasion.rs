use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{loss_value, loss_value_and_gradient, Classifier, LossSpec};
use crate::optim::{solve, Constraint, Problem, SolverConfig, SolverTrace};
use crate::scalar::Scalar;
use crate::tensor::Norm;

/// Threat model of an evasion attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct EvasionSpec<T> {
    pub loss: LossSpec<T>,
    pub norm: Norm,
    /// Perturbation budget; may be absent only for patch attacks.
    #[serde(default)]
    pub epsilon: Option<T>,
    /// Features the attacker may change; all others stay at the clean value.
    #[serde(default)]
    pub patch_mask: Option<Vec<bool>>,
    /// Global `(lo, hi)` box on every feature.
    #[serde(default)]
    pub input_bounds: Option<(T, T)>,
}

impl<T: Scalar> EvasionSpec<T> {
    pub fn new(loss: LossSpec<T>, norm: Norm, epsilon: T) -> Self {
        Self {
            loss,
            norm,
            epsilon: Some(epsilon),
            patch_mask: None,
            input_bounds: None,
        }
    }

    pub fn with_bounds(mut self, lo: T, hi: T) -> Self {
        self.input_bounds = Some((lo, hi));
        self
    }

    pub fn with_patch(mut self, mask: Vec<bool>) -> Self {
        self.patch_mask = Some(mask);
        self
    }

    pub fn with_epsilon(mut self, epsilon: Option<T>) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self, n_features: usize, n_classes: usize) -> Result<()> {
        self.loss.validate(n_classes)?;
        if !matches!(self.norm, Norm::L2 | Norm::Linf) {
            return Err(Error::InvalidSpec("evasion norm must be l2 or linf".into()));
        }
        match (self.epsilon, &self.patch_mask) {
            (None, None) => {
                return Err(Error::InvalidSpec(
                    "epsilon is required without a patch_mask".into(),
                ))
            }
            (Some(e), _) if !(e.is_finite() && e >= T::zero()) => {
                return Err(Error::InvalidSpec(
                    "epsilon must be finite and non-negative".into(),
                ))
            }
            _ => {}
        }
        if let Some(mask) = &self.patch_mask {
            if mask.len() != n_features {
                return Err(Error::InvalidSpec(format!(
                    "patch_mask has {} entries for {n_features} features",
                    mask.len()
                )));
            }
        }
        if let Some((lo, hi)) = self.input_bounds {
            if !(lo <= hi) {
                return Err(Error::InvalidSpec(
                    "input_bounds must satisfy lo <= hi".into(),
                ));
            }
        }
        Ok(())
    }

    /// Feasible set around the clean point `x`.
    pub fn constraint(&self, x: &[T]) -> Result<Constraint<T>> {
        let d = x.len();
        let bounds = self
            .input_bounds
            .map(|(lo, hi)| Constraint::uniform_box(d, lo, hi));
        let inner = match self.epsilon {
            Some(eps) if self.norm == Norm::Linf => {
                // the ball and the bounds are both coordinatewise boxes
                let (lo, hi) = self
                    .input_bounds
                    .unwrap_or((T::neg_infinity(), T::infinity()));
                let lower: Vec<T> = x.iter().map(|&v| (v - eps).max(lo)).collect();
                let upper: Vec<T> = x.iter().map(|&v| (v + eps).min(hi)).collect();
                if lower.iter().zip(&upper).any(|(l, u)| l > u) {
                    return Err(Error::InvalidArgument(
                        "clean point lies outside input_bounds".into(),
                    ));
                }
                Constraint::bounds(lower, upper)
            }
            Some(eps) => {
                let ball = Constraint::l2_ball(x.to_vec(), eps);
                match bounds {
                    Some(b) => Constraint::Intersection {
                        parts: vec![ball, b],
                    },
                    None => ball,
                }
            }
            None => bounds
                .unwrap_or_else(|| Constraint::uniform_box(d, T::neg_infinity(), T::infinity())),
        };
        Ok(match &self.patch_mask {
            Some(mask) => Constraint::masked(inner, mask.clone(), x.to_vec()),
            None => inner,
        })
    }

    /// Whether `label` counts as a successful attack on a point of class `y_true`.
    pub fn is_success(&self, label: usize, y_true: usize) -> bool {
        match self.loss.target_label {
            Some(t) => label == t,
            None => label != y_true,
        }
    }
}

/// Outcome of one evasion attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult<T> {
    pub x_adv: Vec<T>,
    pub success: bool,
    pub initial_label: usize,
    pub final_label: usize,
    pub trace: SolverTrace<T>,
    pub per_iteration_scores: Vec<Vec<T>>,
}

/// Attacks `x` (true class `y_true`) starting from `x` itself.
pub fn run_evasion<T: Scalar, C: Classifier<T> + ?Sized>(
    m: &C,
    x: &[T],
    y_true: usize,
    spec: &EvasionSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<AttackResult<T>> {
    run_evasion_from(m, x, x, y_true, spec, cfg)
}

/// Attacks `x` with the solver started at `x0` (projected onto the feasible set).
pub fn run_evasion_from<T: Scalar, C: Classifier<T> + ?Sized>(
    m: &C,
    x: &[T],
    x0: &[T],
    y_true: usize,
    spec: &EvasionSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<AttackResult<T>> {
    if x.len() != m.n_features() || x0.len() != x.len() {
        return Err(Error::Shape(format!(
            "attack point of dimension {} for a model with {} features",
            x.len(),
            m.n_features()
        )));
    }
    if y_true >= m.n_classes() {
        return Err(Error::InvalidArgument(format!(
            "label {y_true} out of range"
        )));
    }
    spec.validate(m.n_features(), m.n_classes())?;
    if spec.loss.target_label == Some(y_true) {
        return Err(Error::InvalidSpec(format!(
            "target_label equals the true label {y_true}"
        )));
    }
    if cfg.method.needs_gradient() && !m.is_differentiable() {
        return Err(Error::NotDifferentiable(format!(
            "solver {} needs gradients; use random-search",
            cfg.method.name()
        )));
    }
    // untargeted attacks maximize the cross-entropy of the true label
    let sign = if spec.loss.is_targeted() {
        T::one()
    } else {
        -T::one()
    };
    let loss = &spec.loss;
    let problem = Problem::new(
        move |z: &[T]| Ok(sign * loss_value(m, z, y_true, loss)?),
        spec.constraint(x)?,
    );
    let problem = if m.is_differentiable() {
        problem.with_gradient(move |z: &[T]| {
            let (_, g) = loss_value_and_gradient(m, z, y_true, loss)?;
            Ok(g.into_iter().map(|v| sign * v).collect())
        })
    } else {
        problem
    };
    let initial_label = m.predict(x)?;
    let (x_adv, trace) = solve(&problem, x0, cfg)?;
    let per_iteration_scores = trace
        .points
        .iter()
        .map(|p| m.decision_scores(p))
        .collect::<Result<Vec<_>>>()?;
    let final_label = crate::models::argmax(per_iteration_scores.last().expect("trace holds x0"));
    Ok(AttackResult {
        success: spec.is_success(final_label, y_true),
        x_adv,
        initial_label,
        final_label,
        trace,
        per_iteration_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelSpec, TrainedModel};

    /// Binary model with score difference `x_0`: boundary is `x_0 = 0`.
    fn halfplane() -> TrainedModel<f64> {
        TrainedModel::linear(
            ModelSpec::Logreg { lambda: 1.0 },
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![0.0, 0.0],
        )
        .unwrap()
    }

    fn untargeted(eps: f64) -> EvasionSpec<f64> {
        EvasionSpec::new(LossSpec::cross_entropy(), Norm::L2, eps)
    }

    #[test]
    fn zero_budget_keeps_the_point() {
        let m = halfplane();
        let r = run_evasion(
            &m,
            &[-2.0, 0.0],
            0,
            &untargeted(0.0),
            &SolverConfig::pgd(1.0),
        )
        .unwrap();
        assert_eq!(r.x_adv, vec![-2.0, 0.0]);
        assert!(!r.success);
        assert_eq!(r.per_iteration_scores.len(), r.trace.points.len());
    }

    #[test]
    fn success_flips_at_hyperplane_distance() {
        let m = halfplane();
        let cfg = SolverConfig::pgd(100.0);
        assert!(
            run_evasion(&m, &[-2.0, 0.0], 0, &untargeted(2.01), &cfg)
                .unwrap()
                .success
        );
        assert!(
            !run_evasion(&m, &[-2.0, 0.0], 0, &untargeted(1.9), &cfg)
                .unwrap()
                .success
        );
    }

    #[test]
    fn target_equal_to_truth_is_rejected() {
        let m = halfplane();
        let spec = EvasionSpec::new(LossSpec::cw(0, 0.0), Norm::L2, 1.0);
        assert!(matches!(
            run_evasion(&m, &[-2.0, 0.0], 0, &spec, &SolverConfig::pgd(1.0)),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn patch_attack_keeps_unmasked_features() {
        let m = halfplane();
        let spec = EvasionSpec::new(LossSpec::cross_entropy(), Norm::L2, 5.0)
            .with_epsilon(None)
            .with_patch(vec![true, false])
            .with_bounds(-3.0, 3.0);
        let r = run_evasion(&m, &[-2.0, 0.7], 0, &spec, &SolverConfig::pgd(10.0)).unwrap();
        assert!(r.success);
        assert_eq!(r.x_adv[1], 0.7);
        assert!(r.x_adv[0] <= 3.0);
    }

    #[test]
    fn linf_with_bounds_is_a_single_box() {
        let spec = EvasionSpec::new(LossSpec::<f64>::cross_entropy(), Norm::Linf, 0.3)
            .with_bounds(0.0, 1.0);
        let c = spec.constraint(&[0.1, 0.9]).unwrap();
        assert_eq!(c.project(&[-5.0, 5.0]).unwrap(), vec![0.0, 1.0]);
        let p = c.project(&[5.0, -5.0]).unwrap();
        assert!((p[0] - 0.4f64).abs() < 1e-15 && (p[1] - 0.6f64).abs() < 1e-15);
    }

    #[test]
    fn epsilon_or_mask_required() {
        let spec = untargeted(1.0).with_epsilon(None);
        assert!(spec.validate(2, 2).is_err());
        assert!(untargeted(1.0)
            .with_patch(vec![true])
            .validate(2, 2)
            .is_err());
    }
}
