use serde::{Deserialize, Serialize};

use super::evasion::{run_evasion_from, EvasionSpec};
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::optim::SolverConfig;
use crate::parallel::parallel_map;
use crate::scalar::Scalar;
use crate::tensor::Dataset;

/// Accuracy under attack as a function of the perturbation budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct SecurityEvalCurve<T> {
    pub eps_grid: Vec<T>,
    pub accuracy_at_eps: Vec<f64>,
    /// Mean decrease of the true-class score relative to the clean input.
    pub mean_confidence_drop: Vec<T>,
    pub attack: EvasionSpec<T>,
    pub solver: SolverConfig<T>,
}

impl<T: Scalar> SecurityEvalCurve<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,accuracy,mean_confidence_drop\n");
        for ((e, a), c) in self
            .eps_grid
            .iter()
            .zip(&self.accuracy_at_eps)
            .zip(&self.mean_confidence_drop)
        {
            out.push_str(&format!("{},{},{}\n", *e + T::zero(), a + 0.0, *c + T::zero()));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Mixes a base seed with indices (SplitMix64 finalizer per step).
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(base, |acc, &i| {
        let mut z = acc ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

fn check_grid<T: Scalar>(eps_grid: &[T]) -> Result<()> {
    if eps_grid.first() != Some(&T::zero()) {
        return Err(Error::InvalidSpec("eps_grid must start at 0".into()));
    }
    if eps_grid.windows(2).any(|w| !(w[0] < w[1])) || eps_grid.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidSpec(
            "eps_grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Runs the attack at every budget of `eps_grid` on every test sample.
///
/// Each sample's attack at a budget starts from its adversarial point at the
/// previous budget, and a sample evaded once stays evaded, so accuracy never
/// increases along the grid. The `epsilon` of `spec` is replaced per budget.
pub fn security_evaluation<T: Scalar, C: Classifier<T> + ?Sized>(
    m: &C,
    test: &Dataset<T>,
    spec: &EvasionSpec<T>,
    eps_grid: &[T],
    cfg: &SolverConfig<T>,
    workers: usize,
) -> Result<SecurityEvalCurve<T>> {
    check_grid(eps_grid)?;
    if test.is_empty() {
        return Err(Error::EmptyDataset(
            "security evaluation needs test samples".into(),
        ));
    }
    let samples: Vec<usize> = (0..test.n_samples()).collect();
    let per_sample = parallel_map(&samples, workers, |_, &i| {
        let (x, y) = test.sample(i);
        let clean = m.decision_scores(&x)?[y];
        let mut evaded = m.predict(&x)? != y;
        let mut current = x.clone();
        let mut rows = Vec::with_capacity(eps_grid.len());
        for (j, &eps) in eps_grid.iter().enumerate() {
            if eps > T::zero() && !evaded {
                let at_eps = spec.clone().with_epsilon(Some(eps));
                let seeded = cfg
                    .clone()
                    .with_seed(derive_seed(cfg_seed(cfg), &[i as u64, j as u64]));
                let r = run_evasion_from(m, &x, &current, y, &at_eps, &seeded)?;
                current = r.x_adv;
                evaded = r.final_label != y;
            }
            rows.push((evaded, clean - m.decision_scores(&current)?[y]));
        }
        Ok(rows)
    })?;
    let n = test.n_samples();
    let accuracy_at_eps = (0..eps_grid.len())
        .map(|j| per_sample.iter().filter(|r| !r[j].0).count() as f64 / n as f64)
        .collect();
    let mean_confidence_drop = (0..eps_grid.len())
        .map(|j| per_sample.iter().map(|r| r[j].1).sum::<T>() / T::from_usize_lossy(n))
        .collect();
    Ok(SecurityEvalCurve {
        eps_grid: eps_grid.to_vec(),
        accuracy_at_eps,
        mean_confidence_drop,
        attack: spec.clone(),
        solver: cfg.clone(),
    })
}

fn cfg_seed<T>(cfg: &SolverConfig<T>) -> u64 {
    match cfg.method {
        crate::optim::SolverMethod::RandomSearch { seed, .. } => seed,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, LossSpec, ModelSpec};
    use crate::tensor::{make_blobs, Norm};

    #[test]
    fn zero_grid_is_clean_accuracy() {
        let ds = make_blobs(30, &[vec![-1.0, 0.0], vec![1.0, 0.0]], 0.8, 3).unwrap();
        let m = fit(&ModelSpec::Logreg { lambda: 0.1 }, &ds).unwrap();
        let spec = EvasionSpec::new(LossSpec::cross_entropy(), Norm::L2, 0.0);
        let curve =
            security_evaluation(&m, &ds, &spec, &[0.0], &SolverConfig::pgd(0.5), 1).unwrap();
        assert_eq!(curve.accuracy_at_eps, vec![m.accuracy_on(&ds).unwrap()]);
        assert_eq!(curve.mean_confidence_drop, vec![0.0]);
        assert!(curve
            .to_csv()
            .starts_with("eps,accuracy,mean_confidence_drop\n0,"));
    }

    #[test]
    fn grid_validation() {
        assert!(check_grid(&[0.1, 0.2]).is_err());
        assert!(check_grid(&[0.0, 0.2, 0.2]).is_err());
        assert!(check_grid(&[0.0, 0.2, 0.3]).is_ok());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(7, &[3]), derive_seed(7, &[3]));
    }
}
