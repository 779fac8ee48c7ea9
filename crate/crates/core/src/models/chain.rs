use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier, TrainedModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Dataset, Tensor};

/// Per-feature affine map of the training range `[min_j, max_j]` onto `[0, 1]`.
/// Constant features map to 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler<T> {
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
}

pub fn fit_scaler<T: Scalar>(ds: &Dataset<T>) -> Result<MinMaxScaler<T>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(
            "cannot fit a scaler on an empty dataset".into(),
        ));
    }
    let (mins, maxs) = ds.column_ranges().into_iter().unzip();
    Ok(MinMaxScaler { mins, maxs })
}

impl<T: Scalar> MinMaxScaler<T> {
    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn transform(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    (v - lo) / (hi - lo)
                } else {
                    T::lit(0.5)
                }
            })
            .collect()
    }

    /// Diagonal of the Jacobian: `1 / (max_j − min_j)`, or 0 for constant features.
    pub fn jacobian_diag(&self) -> Vec<T> {
        self.mins
            .iter()
            .zip(&self.maxs)
            .map(|(&lo, &hi)| {
                if hi > lo {
                    T::one() / (hi - lo)
                } else {
                    T::zero()
                }
            })
            .collect()
    }

    pub fn transform_dataset(&self, ds: &Dataset<T>) -> Result<Dataset<T>> {
        let rows: Vec<Vec<T>> = ds.rows().iter().map(|r| self.transform(r)).collect();
        let x = Tensor::from_rows(&rows)?;
        let x = if ds.x().is_sparse() { x.to_sparse() } else { x };
        Dataset::new(x, ds.y().to_vec(), ds.n_classes())
    }
}

/// Scaler followed by a classifier; gradients flow through both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleChain<T> {
    pub scaler: MinMaxScaler<T>,
    pub model: TrainedModel<T>,
}

pub fn chain<T: Scalar>(model: TrainedModel<T>, scaler: MinMaxScaler<T>) -> Result<ModuleChain<T>> {
    check_dim(model.n_features(), scaler.n_features())?;
    Ok(ModuleChain { scaler, model })
}

impl<T: Scalar> ModuleChain<T> {
    /// Scores and the end-to-end input gradient of one class score.
    pub fn scores_and_gradient(&self, x: &[T], class_idx: usize) -> Result<(Vec<T>, Vec<T>)> {
        Ok((self.decision_scores(x)?, self.input_gradient(x, class_idx)?))
    }
}

impl<T: Scalar> Classifier<T> for ModuleChain<T> {
    fn n_features(&self) -> usize {
        self.scaler.n_features()
    }

    fn n_classes(&self) -> usize {
        self.model.n_classes()
    }

    fn is_differentiable(&self) -> bool {
        self.model.is_differentiable()
    }

    fn decision_scores(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.n_features(), x.len())?;
        self.model.decision_scores(&self.scaler.transform(x))
    }

    fn weighted_score_gradient(&self, x: &[T], weights: &[T]) -> Result<Vec<T>> {
        check_dim(self.n_features(), x.len())?;
        let g = self
            .model
            .weighted_score_gradient(&self.scaler.transform(x), weights)?;
        Ok(g.iter()
            .zip(self.scaler.jacobian_diag())
            .map(|(&a, b)| a * b)
            .collect())
    }
}

/// A classifier as stored on disk: optionally preceded by a scaler.
#[derive(Debug, Clone, PartialEq)]
pub enum Pipeline<T> {
    Bare(TrainedModel<T>),
    Chain(ModuleChain<T>),
}

impl<T: Scalar> Pipeline<T> {
    pub fn model(&self) -> &TrainedModel<T> {
        match self {
            Self::Bare(m) => m,
            Self::Chain(c) => &c.model,
        }
    }

    pub fn scaler(&self) -> Option<&MinMaxScaler<T>> {
        match self {
            Self::Bare(_) => None,
            Self::Chain(c) => Some(&c.scaler),
        }
    }

    fn inner(&self) -> &dyn Classifier<T> {
        match self {
            Self::Bare(m) => m,
            Self::Chain(c) => c,
        }
    }
}

impl<T: Scalar> Classifier<T> for Pipeline<T> {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn is_differentiable(&self) -> bool {
        self.inner().is_differentiable()
    }

    fn decision_scores(&self, x: &[T]) -> Result<Vec<T>> {
        self.inner().decision_scores(x)
    }

    fn weighted_score_gradient(&self, x: &[T], weights: &[T]) -> Result<Vec<T>> {
        self.inner().weighted_score_gradient(x, weights)
    }
}
