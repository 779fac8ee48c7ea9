use serde::{Deserialize, Serialize};

use super::constraint::Constraint;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type ObjectiveFn<'a, T> = Box<dyn Fn(&[T]) -> Result<T> + Send + Sync + 'a>;
pub type GradientFn<'a, T> = Box<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'a>;

/// A minimization problem: objective, optional gradient, feasible set.
pub struct Problem<'a, T> {
    objective: ObjectiveFn<'a, T>,
    gradient: Option<GradientFn<'a, T>>,
    constraint: Constraint<T>,
}

impl<'a, T: Scalar> Problem<'a, T> {
    pub fn new(
        objective: impl Fn(&[T]) -> Result<T> + Send + Sync + 'a,
        constraint: Constraint<T>,
    ) -> Self {
        Self {
            objective: Box::new(objective),
            gradient: None,
            constraint,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'a,
    ) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn constraint(&self) -> &Constraint<T> {
        &self.constraint
    }

    pub fn objective(&self, x: &[T]) -> Result<T> {
        (self.objective)(x)
    }

    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        match &self.gradient {
            Some(g) => g(x),
            None => Err(Error::InvalidSpec("problem has no gradient".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "kebab-case")]
pub enum SolverMethod<T> {
    Pgd { step_size: T },
    PgdLs { ls_max_evals: usize, ls_min_step: T },
    RandomSearch { sigma: T, trials: usize, seed: u64 },
}

impl<T> SolverMethod<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Pgd { .. } => "pgd",
            Self::PgdLs { .. } => "pgd-ls",
            Self::RandomSearch { .. } => "random-search",
        }
    }

    pub fn needs_gradient(&self) -> bool {
        !matches!(self, Self::RandomSearch { .. })
    }
}

pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct SolverConfig<T> {
    #[serde(flatten)]
    pub method: SolverMethod<T>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "zero")]
    pub stop_tol: T,
    /// Stop before an iteration once this many objective calls were made.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fun_evals: Option<usize>,
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn zero<T: Scalar>() -> T {
    T::zero()
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(method: SolverMethod<T>) -> Self {
        Self {
            method,
            max_iter: DEFAULT_MAX_ITER,
            stop_tol: T::zero(),
            max_fun_evals: None,
        }
    }

    pub fn pgd(step_size: T) -> Self {
        Self::new(SolverMethod::Pgd { step_size })
    }

    pub fn pgd_ls(ls_max_evals: usize, ls_min_step: T) -> Self {
        Self::new(SolverMethod::PgdLs {
            ls_max_evals,
            ls_min_step,
        })
    }

    pub fn random_search(sigma: T, trials: usize, seed: u64) -> Self {
        Self::new(SolverMethod::RandomSearch {
            sigma,
            trials,
            seed,
        })
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: T) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn with_max_fun_evals(mut self, budget: usize) -> Self {
        self.max_fun_evals = Some(budget);
        self
    }

    /// Replaces the seed of a random-search config; other solvers are unchanged.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let SolverMethod::RandomSearch { seed, .. } = &mut self.method {
            *seed = new_seed;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, what: &str| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{what} must be positive")))
            }
        };
        if self.max_iter == 0 {
            return Err(Error::InvalidSpec("max_iter must be positive".into()));
        }
        if !(self.stop_tol.is_finite() && self.stop_tol >= T::zero()) {
            return Err(Error::InvalidSpec("stop_tol must be non-negative".into()));
        }
        match self.method {
            SolverMethod::Pgd { step_size } => positive(step_size, "step_size"),
            SolverMethod::PgdLs {
                ls_max_evals,
                ls_min_step,
            } => {
                if ls_max_evals == 0 {
                    return Err(Error::InvalidSpec("ls_max_evals must be positive".into()));
                }
                positive(ls_min_step, "ls_min_step")
            }
            SolverMethod::RandomSearch { sigma, trials, .. } => {
                if trials == 0 {
                    return Err(Error::InvalidSpec("trials must be positive".into()));
                }
                positive(sigma, "sigma")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIter,
    TolReached,
    BudgetExhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MaxIter => "max-iter",
            Self::TolReached => "tol-reached",
            Self::BudgetExhausted => "budget-exhausted",
        }
    }
}

/// Accepted iterates with their objective values and evaluation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace<T> {
    pub points: Vec<Vec<T>>,
    pub losses: Vec<T>,
    pub n_fun_evals: usize,
    pub n_grad_evals: usize,
    pub stop_reason: StopReason,
}

impl<T: Scalar> SolverTrace<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first_loss(&self) -> T {
        self.losses[0]
    }

    pub fn final_loss(&self) -> T {
        *self.losses.last().expect("trace holds x0")
    }

    pub fn final_point(&self) -> &[T] {
        self.points.last().expect("trace holds x0")
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_shape() {
        let cfg: SolverConfig<f64> =
            serde_json::from_str(r#"{"solver":"pgd-ls","ls_max_evals":20,"ls_min_step":0.01}"#)
                .unwrap();
        assert_eq!(cfg.max_iter, 50);
        assert_eq!(cfg.method.name(), "pgd-ls");
        assert!(cfg.validate().is_ok());
        assert!(serde_json::from_str::<SolverConfig<f64>>(r#"{"solver":"pgd"}"#).is_err());
    }

    #[test]
    fn trace_json_shape() {
        let t = SolverTrace {
            points: vec![vec![1.0, 2.0]],
            losses: vec![0.5],
            n_fun_evals: 1,
            n_grad_evals: 0,
            stop_reason: StopReason::TolReached,
        };
        let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["stop_reason"], "tol-reached");
        assert_eq!(v["points"][0][1], 2.0);
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
    }

    #[test]
    fn invalid_configs() {
        assert!(SolverConfig::pgd(0.0).validate().is_err());
        assert!(SolverConfig::pgd(0.1).with_max_iter(0).validate().is_err());
        assert!(SolverConfig::random_search(0.1, 0, 1).validate().is_err());
        assert!(SolverConfig::pgd_ls(0, 0.1).validate().is_err());
    }
}
