use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::models::{LinearLoss, LinearObjective, ModelSpec, TrainingSet};
use crate::scalar::Scalar;
use crate::tensor::Dataset;

const FIT_MAX_ITER: usize = 100;

/// Influence of every training point on the loss at one test point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceResult<T> {
    /// Positive: upweighting the training point raises the test loss.
    pub per_training_point: Vec<T>,
    pub test_point: Vec<T>,
    pub test_label: usize,
}

impl<T: Scalar> InfluenceResult<T> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Training indices sorted by decreasing influence.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.per_training_point.len()).collect();
        idx.sort_by(|&a, &b| {
            self.per_training_point[b]
                .partial_cmp(&self.per_training_point[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Scores `−∇L_testᵀ H⁻¹ ∇ℓ_i` at the fitted optimum of a linear victim.
pub fn influence<T: Scalar>(victim: &ModelSpec<T>, train: &Dataset<T>, x_test: &[T], y_test: usize) -> Result<InfluenceResult<T>> {
    victim.validate()?;
    let (loss, lambda) = match *victim {
        ModelSpec::Logreg { lambda } => (LinearLoss::Logistic, lambda),
        ModelSpec::SvmLinear { lambda } => (LinearLoss::SquaredHinge, lambda),
        _ => {
            return Err(Error::InvalidSpec(format!(
                "influence needs a logreg or svm-linear victim, got {}",
                victim.name()
            )))
        }
    };
    crate::models::check_trainable(train)?;
    if x_test.len() != train.n_features() {
        return Err(Error::Shape("test point dimension differs from the training data".into()));
    }
    if y_test >= train.n_classes() {
        return Err(Error::InvalidArgument(format!("test label {y_test} out of range")));
    }
    let obj = LinearObjective {
        loss,
        n_classes: train.n_classes(),
        n_features: train.n_features(),
        lambda,
    };
    let set = TrainingSet::uniform(train.rows(), train.y().to_vec());
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(1e4));
    let theta = obj.minimize(vec![T::zero(); obj.n_params()], &set, tol, FIT_MAX_ITER)?;
    let v = solve_spd(&obj.hessian(&theta, &set), &obj.sample_grad(&theta, x_test, y_test))?;
    let per_training_point = set
        .rows
        .iter()
        .zip(&set.labels)
        .map(|(x, &y)| -crate::linalg::dot(&v, &obj.sample_grad(&theta, x, y)))
        .collect();
    Ok(InfluenceResult {
        per_training_point,
        test_point: x_test.to_vec(),
        test_label: y_test,
    })
}
