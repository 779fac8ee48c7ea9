use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Attribution, ExplainMethod};
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};
use crate::models::Classifier;
use crate::scalar::Scalar;

const RIDGE: f64 = 1e-3;
const SAMPLE_SCALE: f64 = 0.1;
const MIN_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSettings<T> {
    pub n_samples: usize,
    pub kernel_width: T,
    pub seed: u64,
    /// Per-feature value range scaling the perturbations; all ones if absent.
    pub ranges: Option<Vec<T>>,
}

/// Local weighted ridge fit of the `target` score around `x`; the fitted
/// slopes are the attributions. Needs only score evaluations.
pub fn linear_surrogate<T: Scalar, C: Classifier<T> + ?Sized>(
    m: &C,
    x: &[T],
    target: usize,
    settings: &SurrogateSettings<T>,
) -> Result<Attribution<T>> {
    let d = x.len();
    if d != m.n_features() {
        return Err(Error::Shape(format!("input of dimension {d} for {} features", m.n_features())));
    }
    if target >= m.n_classes() {
        return Err(Error::InvalidArgument(format!("target class {target} out of range")));
    }
    if settings.n_samples == 0 || !(settings.kernel_width > T::zero()) {
        return Err(Error::InvalidArgument("n_samples and kernel_width must be positive".into()));
    }
    let ranges = settings.ranges.clone().unwrap_or_else(|| vec![T::one(); d]);
    if ranges.len() != d {
        return Err(Error::Shape("ranges length differs from the input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let width2 = settings.kernel_width * settings.kernel_width;
    // normal equations over [1, z − x]
    let mut gram = Matrix::zeros(d + 1, d + 1);
    let mut rhs = vec![T::zero(); d + 1];
    let mut any_weight = false;
    for _ in 0..settings.n_samples {
        let offset: Vec<T> = ranges
            .iter()
            .map(|&r| {
                let n: f64 = StandardNormal.sample(&mut rng);
                T::lit(SAMPLE_SCALE) * r * T::lit(n)
            })
            .collect();
        let z: Vec<T> = x.iter().zip(&offset).map(|(&a, &o)| a + o).collect();
        let dist2: T = offset.iter().map(|&o| o * o).sum();
        let w = (-dist2 / width2).exp();
        any_weight |= w >= T::lit(MIN_WEIGHT);
        let score = m.decision_scores(&z)?[target];
        let mut feat = Vec::with_capacity(d + 1);
        feat.push(T::one());
        feat.extend_from_slice(&offset);
        gram.add_outer_block(0, 0, w, &feat, &feat);
        for (r, &f) in rhs.iter_mut().zip(&feat) {
            *r += w * f * score;
        }
    }
    if !any_weight {
        return Err(Error::KernelWidth);
    }
    for j in 1..=d {
        gram[(j, j)] += T::lit(RIDGE);
    }
    let coef = solve_spd(&gram, &rhs)?;
    Ok(Attribution {
        per_feature: coef[1..].to_vec(),
        baseline: x.to_vec(),
        target_class: target,
        method: ExplainMethod::LinearSurrogate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelSpec, TrainedModel};

    fn settings(seed: u64) -> SurrogateSettings<f64> {
        SurrogateSettings {
            n_samples: 500,
            kernel_width: 1.0,
            seed,
            ranges: None,
        }
    }

    #[test]
    fn flat_model_gives_zero() {
        let m = TrainedModel::linear(ModelSpec::Logreg { lambda: 1.0 }, vec![vec![0.0; 3]; 2], vec![0.0; 2]).unwrap();
        let a = linear_surrogate(&m, &[0.3, 0.1, -0.2], 0, &settings(1)).unwrap();
        assert!(a.per_feature.iter().all(|v| v.abs() <= 1e-6));
    }

    #[test]
    fn deterministic_per_seed() {
        let m = TrainedModel::linear(ModelSpec::Logreg { lambda: 1.0 }, vec![vec![1.0, 2.0], vec![0.0, -1.0]], vec![0.0; 2]).unwrap();
        let a = linear_surrogate(&m, &[0.3, 0.1], 1, &settings(4)).unwrap();
        let b = linear_surrogate(&m, &[0.3, 0.1], 1, &settings(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_width_is_rejected() {
        let m = TrainedModel::linear(ModelSpec::Logreg { lambda: 1.0 }, vec![vec![1.0; 4]; 2], vec![0.0; 2]).unwrap();
        let mut s = settings(2);
        s.kernel_width = 1e-6;
        assert!(matches!(linear_surrogate(&m, &[0.0; 4], 0, &s), Err(Error::KernelWidth)));
    }
}
