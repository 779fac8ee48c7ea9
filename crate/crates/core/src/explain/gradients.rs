use super::{Attribution, ExplainMethod};
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::scalar::Scalar;

/// Integrated gradients of the `target` score along the straight path from
/// `baseline` to `x`, by a midpoint Riemann sum with `m_steps` nodes.
pub fn integrated_gradients<T: Scalar, C: Classifier<T> + ?Sized>(
    m: &C,
    x: &[T],
    baseline: &[T],
    target: usize,
    m_steps: usize,
) -> Result<Attribution<T>> {
    if !m.is_differentiable() {
        return Err(Error::NotDifferentiable("integrated gradients need input gradients".into()));
    }
    if x.len() != m.n_features() || baseline.len() != x.len() {
        return Err(Error::Shape(format!(
            "input {} and baseline {} for a model with {} features",
            x.len(),
            baseline.len(),
            m.n_features()
        )));
    }
    if target >= m.n_classes() {
        return Err(Error::InvalidArgument(format!("target class {target} out of range")));
    }
    if m_steps == 0 {
        return Err(Error::InvalidArgument("m_steps must be positive".into()));
    }
    let steps = T::from_usize_lossy(m_steps);
    let delta: Vec<T> = x.iter().zip(baseline).map(|(&a, &b)| a - b).collect();
    let mut sum = vec![T::zero(); x.len()];
    for k in 0..m_steps {
        let alpha = (T::from_usize_lossy(k) + T::lit(0.5)) / steps;
        let point: Vec<T> = baseline.iter().zip(&delta).map(|(&b, &d)| b + alpha * d).collect();
        for (s, g) in sum.iter_mut().zip(m.input_gradient(&point, target)?) {
            *s += g;
        }
    }
    Ok(Attribution {
        per_feature: delta.iter().zip(&sum).map(|(&d, &s)| d * s / steps).collect(),
        baseline: baseline.to_vec(),
        target_class: target,
        method: ExplainMethod::IntegratedGradients,
    })
}
