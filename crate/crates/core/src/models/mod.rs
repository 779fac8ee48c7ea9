//! Natively implemented classifiers with analytic input gradients.

mod chain;
mod forest;
mod kernel;
pub(crate) mod linear;
mod loss;
mod mlp;
mod persist;

pub use chain::{chain, fit_scaler, MinMaxScaler, ModuleChain, Pipeline};
pub use forest::{ForestParams, Node, Tree};
pub use kernel::KernelParams;
pub use linear::LinearParams;
pub use loss::{loss_value, loss_value_and_gradient, LossKind, LossSpec};
pub use mlp::{DenseLayer, MlpParams};
pub use persist::{load_pipeline, save_pipeline, SavedModel, MODEL_FORMAT, MODEL_FORMAT_VERSION};

pub(crate) use kernel::{class_targets, gram, rbf, rbf_grad, solve_binary};
pub(crate) use linear::{LinearLoss, LinearObjective, TrainingSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Dataset;

/// Which classifier to fit, with the hyperparameters that kind needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec<T> {
    Logreg {
        lambda: T,
    },
    SvmLinear {
        lambda: T,
    },
    SvmRbf {
        lambda: T,
        gamma: T,
    },
    Mlp {
        lambda: T,
        hidden_sizes: Vec<usize>,
        epochs: usize,
        learning_rate: T,
        seed: u64,
    },
    RandomForest {
        n_trees: usize,
        max_depth: usize,
        seed: u64,
    },
}

impl<T: Scalar> ModelSpec<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Logreg { .. } => "logreg",
            Self::SvmLinear { .. } => "svm-linear",
            Self::SvmRbf { .. } => "svm-rbf",
            Self::Mlp { .. } => "mlp",
            Self::RandomForest { .. } => "random-forest",
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, Self::RandomForest { .. })
    }

    /// Convex, smooth kinds usable as poisoning victims.
    pub fn is_convex(&self) -> bool {
        matches!(
            self,
            Self::Logreg { .. } | Self::SvmLinear { .. } | Self::SvmRbf { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!(
                    "{name} must be positive and finite"
                )))
            }
        };
        match self {
            Self::Logreg { lambda } | Self::SvmLinear { lambda } => positive("lambda", *lambda),
            Self::SvmRbf { lambda, gamma } => {
                positive("lambda", *lambda)?;
                positive("gamma", *gamma)
            }
            Self::Mlp {
                lambda,
                hidden_sizes,
                epochs,
                learning_rate,
                ..
            } => {
                positive("lambda", *lambda)?;
                positive("learning_rate", *learning_rate)?;
                if hidden_sizes.is_empty() || hidden_sizes.len() > 2 || hidden_sizes.contains(&0) {
                    return Err(Error::InvalidSpec(
                        "mlp needs 1 or 2 positive hidden sizes".into(),
                    ));
                }
                if *epochs == 0 {
                    return Err(Error::InvalidSpec("epochs must be positive".into()));
                }
                Ok(())
            }
            Self::RandomForest {
                n_trees, max_depth, ..
            } => {
                if *n_trees == 0 || *max_depth == 0 {
                    return Err(Error::InvalidSpec(
                        "n_trees and max_depth must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Params<T> {
    Linear(LinearParams<T>),
    Kernel(KernelParams<T>),
    Mlp(MlpParams<T>),
    Forest(ForestParams<T>),
}

/// A fitted classifier. Parameters never change after fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<T> {
    spec: ModelSpec<T>,
    n_classes: usize,
    n_features: usize,
    params: Params<T>,
}

/// Read-only interface shared by bare models and preprocessing chains.
pub trait Classifier<T: Scalar>: Sync {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;
    fn is_differentiable(&self) -> bool;

    /// Real-valued per-class scores (logits for probabilistic heads).
    fn decision_scores(&self, x: &[T]) -> Result<Vec<T>>;

    /// Gradient with respect to `x` of `Σ_k weights[k] · score_k(x)`.
    fn weighted_score_gradient(&self, x: &[T], weights: &[T]) -> Result<Vec<T>>;

    fn input_gradient(&self, x: &[T], class_idx: usize) -> Result<Vec<T>> {
        if class_idx >= self.n_classes() {
            return Err(Error::InvalidArgument(format!(
                "class {class_idx} out of range for {} classes",
                self.n_classes()
            )));
        }
        let mut w = vec![T::zero(); self.n_classes()];
        w[class_idx] = T::one();
        self.weighted_score_gradient(x, &w)
    }

    /// Argmax of the scores, lowest index on ties.
    fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.decision_scores(x)?))
    }

    fn predict_all(&self, ds: &Dataset<T>) -> Result<Vec<usize>> {
        (0..ds.n_samples())
            .map(|i| self.predict(&ds.x().row(i)))
            .collect()
    }

    fn accuracy_on(&self, ds: &Dataset<T>) -> Result<f64> {
        crate::tensor::accuracy(ds.y(), &self.predict_all(ds)?)
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "expected {expected} features, got {got}"
        )))
    }
}

const FIT_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 100;

impl<T: Scalar> TrainedModel<T> {
    /// Builds a linear model (`logreg` or `svm-linear`) from explicit weights.
    pub fn linear(spec: ModelSpec<T>, weights: Vec<Vec<T>>, bias: Vec<T>) -> Result<Self> {
        if !matches!(spec, ModelSpec::Logreg { .. } | ModelSpec::SvmLinear { .. }) {
            return Err(Error::InvalidSpec(format!(
                "{} is not a linear kind",
                spec.name()
            )));
        }
        let n_classes = weights.len();
        let n_features = weights.first().map_or(0, Vec::len);
        if n_classes < 2 || bias.len() != n_classes || weights.iter().any(|w| w.len() != n_features)
        {
            return Err(Error::Shape(
                "weights must be K x d with K >= 2 and K biases".into(),
            ));
        }
        Ok(Self {
            spec,
            n_classes,
            n_features,
            params: Params::Linear(LinearParams { weights, bias }),
        })
    }

    /// Builds an RBF kernel model from explicit support points and coefficients.
    pub fn kernel(
        spec: ModelSpec<T>,
        support: Vec<Vec<T>>,
        alpha: Vec<Vec<T>>,
        bias: Vec<T>,
    ) -> Result<Self> {
        let ModelSpec::SvmRbf { gamma, .. } = spec else {
            return Err(Error::InvalidSpec(
                "kernel parameters need an svm-rbf spec".into(),
            ));
        };
        let n_classes = alpha.len();
        let n_features = support.first().map_or(0, Vec::len);
        if n_classes < 2
            || bias.len() != n_classes
            || alpha.iter().any(|a| a.len() != support.len())
        {
            return Err(Error::Shape(
                "alpha must be K x n_support with K >= 2".into(),
            ));
        }
        Ok(Self {
            spec,
            n_classes,
            n_features,
            params: Params::Kernel(KernelParams {
                gamma,
                support_indices: (0..support.len()).collect(),
                support,
                alpha,
                bias,
            }),
        })
    }

    pub fn spec(&self) -> &ModelSpec<T> {
        &self.spec
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    /// Norm of the regularized training-objective gradient with respect to the
    /// parameters, for the convex kinds; `None` for the others.
    pub fn stationarity(&self, ds: &Dataset<T>) -> Option<T> {
        let rows = ds.rows();
        match (&self.spec, &self.params) {
            (ModelSpec::Logreg { lambda } | ModelSpec::SvmLinear { lambda }, Params::Linear(p)) => {
                let obj = LinearObjective {
                    loss: linear_loss(&self.spec)?,
                    n_classes: self.n_classes,
                    n_features: self.n_features,
                    lambda: *lambda,
                };
                let set = TrainingSet::uniform(rows, ds.y().to_vec());
                Some(crate::linalg::norm2(&obj.gradient(&p.to_theta(), &set)))
            }
            (ModelSpec::SvmRbf { lambda, .. }, Params::Kernel(p)) => {
                Some(p.stationarity(&rows, ds.y(), *lambda))
            }
            _ => None,
        }
    }
}

pub(crate) fn linear_loss<T: Scalar>(spec: &ModelSpec<T>) -> Option<LinearLoss> {
    match spec {
        ModelSpec::Logreg { .. } => Some(LinearLoss::Logistic),
        ModelSpec::SvmLinear { .. } => Some(LinearLoss::SquaredHinge),
        _ => None,
    }
}

pub(crate) fn check_trainable<T: Scalar>(ds: &Dataset<T>) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset("cannot fit on an empty dataset".into()));
    }
    if ds.n_classes() < 2 {
        return Err(Error::DegenerateData(
            "need at least two declared classes".into(),
        ));
    }
    let first = ds.y()[0];
    if ds.y().iter().all(|&l| l == first) {
        return Err(Error::DegenerateData(format!(
            "only class {first} is present"
        )));
    }
    Ok(())
}

/// Fits a classifier of the given kind to `ds`.
pub fn fit<T: Scalar>(spec: &ModelSpec<T>, ds: &Dataset<T>) -> Result<TrainedModel<T>> {
    spec.validate()?;
    check_trainable(ds)?;
    let rows = ds.rows();
    let labels = ds.y();
    let (k, d) = (ds.n_classes(), ds.n_features());
    let params = match spec {
        ModelSpec::Logreg { lambda } | ModelSpec::SvmLinear { lambda } => {
            let obj = LinearObjective {
                loss: linear_loss(spec).expect("linear kind"),
                n_classes: k,
                n_features: d,
                lambda: *lambda,
            };
            let set = TrainingSet::uniform(rows, labels.to_vec());
            let theta = obj.minimize(
                vec![T::zero(); obj.n_params()],
                &set,
                fit_tolerance::<T>(),
                NEWTON_MAX_ITER,
            )?;
            Params::Linear(LinearParams::from_theta(&theta, k, d))
        }
        ModelSpec::SvmRbf { lambda, gamma } => {
            Params::Kernel(kernel::fit_rbf(&rows, labels, k, *lambda, *gamma)?)
        }
        ModelSpec::Mlp {
            lambda,
            hidden_sizes,
            epochs,
            learning_rate,
            seed,
        } => {
            let mut sizes = vec![d];
            sizes.extend_from_slice(hidden_sizes);
            sizes.push(k);
            let mut net = MlpParams::init(&sizes, *seed);
            net.train(&rows, labels, *lambda, *learning_rate, *epochs);
            Params::Mlp(net)
        }
        ModelSpec::RandomForest {
            n_trees,
            max_depth,
            seed,
        } => Params::Forest(forest::fit_forest(
            &rows, labels, k, *n_trees, *max_depth, *seed,
        )),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        n_classes: k,
        n_features: d,
        params,
    })
}

/// Gradient-norm target for Newton training: `1e-8`, relaxed for low
/// precision scalars where that is below rounding noise.
pub(crate) fn fit_tolerance<T: Scalar>() -> T {
    T::lit(FIT_TOL).max(T::epsilon() * T::lit(1e4))
}

impl<T: Scalar> Classifier<T> for TrainedModel<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn is_differentiable(&self) -> bool {
        self.spec.is_differentiable()
    }

    fn decision_scores(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.n_features, x.len())?;
        Ok(match &self.params {
            Params::Linear(p) => p.scores(x),
            Params::Kernel(p) => p.scores(x),
            Params::Mlp(p) => p.scores(x),
            Params::Forest(p) => p.scores(x, self.n_classes),
        })
    }

    fn weighted_score_gradient(&self, x: &[T], weights: &[T]) -> Result<Vec<T>> {
        check_dim(self.n_features, x.len())?;
        if weights.len() != self.n_classes {
            return Err(Error::Shape(format!(
                "{} class weights for {} classes",
                weights.len(),
                self.n_classes
            )));
        }
        match &self.params {
            Params::Linear(p) => {
                let mut g = vec![T::zero(); self.n_features];
                for (w, &c) in p.weights.iter().zip(weights) {
                    crate::linalg::axpy(c, w, &mut g);
                }
                Ok(g)
            }
            Params::Kernel(p) => Ok(p.weighted_gradient(x, weights)),
            Params::Mlp(p) => Ok(p.weighted_gradient(x, weights)),
            Params::Forest(_) => Err(Error::NotDifferentiable(
                "random-forest has no input gradient; use the random-search solver".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{make_blobs, make_moons, Tensor};

    fn blobs() -> Dataset<f64> {
        make_blobs(100, &[vec![-3.0, 0.0], vec![3.0, 0.0]], 0.5, 1).unwrap()
    }

    #[test]
    fn logreg_separates_blobs() {
        let m = fit(&ModelSpec::Logreg { lambda: 0.1 }, &blobs()).unwrap();
        assert_eq!(m.accuracy_on(&blobs()).unwrap(), 1.0);
        assert!(m.stationarity(&blobs()).unwrap() <= 1e-6);
    }

    #[test]
    fn single_present_class_is_degenerate() {
        let ds = Dataset::new(
            Tensor::matrix(3, 1, vec![0.0, 1.0, 2.0]).unwrap(),
            vec![0, 0, 0],
            2,
        )
        .unwrap();
        assert!(matches!(
            fit(&ModelSpec::Logreg { lambda: 1.0 }, &ds),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn stump_forest_fits_two_points() {
        let ds =
            Dataset::new(Tensor::matrix(2, 1, vec![0.0, 1.0]).unwrap(), vec![0, 1], 2).unwrap();
        let spec = ModelSpec::RandomForest {
            n_trees: 1,
            max_depth: 1,
            seed: 3,
        };
        let m = fit(&spec, &ds).unwrap();
        assert_eq!(m.accuracy_on(&ds).unwrap(), 1.0);
        assert!(matches!(
            m.input_gradient(&[0.5], 0),
            Err(Error::NotDifferentiable(_))
        ));
        assert!(!m.is_differentiable());
    }

    #[test]
    fn zero_linear_model_scores_zero_and_ties_to_first_class() {
        let m = TrainedModel::linear(
            ModelSpec::Logreg { lambda: 1.0 },
            vec![vec![0.0; 3]; 4],
            vec![0.0; 4],
        )
        .unwrap();
        assert_eq!(m.decision_scores(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 4]);
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]).unwrap(), 0);
        assert!(matches!(m.decision_scores(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax(&[0.0, 0.0]), 0);
        assert_eq!(argmax(&[-1.0, 5.0, 2.0]), 1);
    }

    #[test]
    fn binary_linear_gradient_is_weight_row() {
        let m = TrainedModel::linear(
            ModelSpec::Logreg { lambda: 1.0 },
            vec![vec![0.0, 0.0], vec![1.0, -2.0]],
            vec![0.0, 0.5],
        )
        .unwrap();
        for x in [[0.0, 0.0], [3.0, -7.0]] {
            assert_eq!(m.input_gradient(&x, 1).unwrap(), vec![1.0, -2.0]);
        }
        assert_eq!(
            m.decision_scores(&[2.0, 3.0]).unwrap(),
            m.decision_scores(&[2.0, 3.0]).unwrap()
        );
    }

    #[test]
    fn rbf_gradient_vanishes_at_lone_support_vector() {
        let spec = ModelSpec::SvmRbf {
            lambda: 1.0,
            gamma: 0.7,
        };
        let m = TrainedModel::kernel(
            spec,
            vec![vec![0.3, -0.2]],
            vec![vec![1.5], vec![-1.5]],
            vec![1.5, -1.5],
        )
        .unwrap();
        assert_eq!(m.input_gradient(&[0.3, -0.2], 0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rbf_scores_match_representer_sum() {
        let ds = make_moons(60, 0.1, 4).unwrap();
        let m = fit(
            &ModelSpec::SvmRbf {
                lambda: 0.1,
                gamma: 2.0,
            },
            &ds,
        )
        .unwrap();
        let Params::Kernel(p) = m.params() else {
            unreachable!()
        };
        let x = p.support[0].clone();
        for k in 0..2 {
            let direct: f64 = p
                .support
                .iter()
                .zip(&p.alpha[k])
                .map(|(s, a)| {
                    a * ((-2.0
                        * s.iter()
                            .zip(&x)
                            .map(|(u, v): (&f64, &f64)| (u - v).powi(2))
                            .sum::<f64>())
                    .exp()
                        + 1.0)
                })
                .sum();
            assert!((m.decision_scores(&x).unwrap()[k] - direct).abs() < 1e-12);
        }
        assert!(m.stationarity(&ds).unwrap() <= 1e-6);
    }

    #[test]
    fn fit_is_deterministic_and_validates() {
        let ds = make_moons(80, 0.1, 0).unwrap();
        let spec = ModelSpec::Mlp {
            lambda: 1e-4,
            hidden_sizes: vec![8],
            epochs: 50,
            learning_rate: 0.5,
            seed: 5,
        };
        assert_eq!(fit(&spec, &ds).unwrap(), fit(&spec, &ds).unwrap());
        let bad = ModelSpec::Mlp {
            lambda: 1e-4,
            hidden_sizes: vec![4, 4, 4],
            epochs: 50,
            learning_rate: 0.5,
            seed: 5,
        };
        assert!(matches!(fit(&bad, &ds), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn logreg_in_single_precision() {
        let ds = make_blobs(60, &[vec![-3.0f32, 0.0], vec![3.0, 0.0]], 0.5, 2).unwrap();
        let m = fit(&ModelSpec::Logreg { lambda: 0.1f32 }, &ds).unwrap();
        assert_eq!(m.accuracy_on(&ds).unwrap(), 1.0);
    }
}
