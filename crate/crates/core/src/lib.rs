//! Adversarial robustness evaluation for machine-learning classifiers.
//!
//! The crate is generic over the floating-point element type through
//! [`Scalar`]; the aliases at the crate root fix it to `f64`.

pub mod attacks;
pub mod error;
pub mod explain;
pub mod linalg;
pub mod models;
pub mod optim;
pub mod parallel;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use models::Classifier;
pub use scalar::Scalar;

pub type Tensor = tensor::Tensor<f64>;
pub type Dataset = tensor::Dataset<f64>;
pub type ModelSpec = models::ModelSpec<f64>;
pub type TrainedModel = models::TrainedModel<f64>;
pub type ModuleChain = models::ModuleChain<f64>;
pub type Pipeline = models::Pipeline<f64>;
pub type LossSpec = models::LossSpec<f64>;
pub type Constraint = optim::Constraint<f64>;
pub type Problem<'a> = optim::Problem<'a, f64>;
pub type SolverConfig = optim::SolverConfig<f64>;
pub type SolverTrace = optim::SolverTrace<f64>;
pub type EvasionSpec = attacks::EvasionSpec<f64>;
pub type AttackResult = attacks::AttackResult<f64>;
pub type PoisoningSpec = attacks::PoisoningSpec<f64>;
pub type PoisoningResult = attacks::PoisoningResult<f64>;
pub type SecurityEvalCurve = attacks::SecurityEvalCurve<f64>;
pub type Attribution = explain::Attribution<f64>;
pub type InfluenceResult = explain::InfluenceResult<f64>;
