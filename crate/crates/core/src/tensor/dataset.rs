use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Labelled samples: one row of `x` per entry of `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    x: Tensor<T>,
    y: Vec<usize>,
    n_classes: usize,
    feature_bounds: Option<Vec<(T, T)>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Tensor<T>, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        Self::with_bounds(x, y, n_classes, None)
    }

    pub fn with_bounds(
        x: Tensor<T>,
        y: Vec<usize>,
        n_classes: usize,
        feature_bounds: Option<Vec<(T, T)>>,
    ) -> Result<Self> {
        if x.ndim() != 2 {
            return Err(Error::Shape(format!(
                "dataset features must be 2-D, got {:?}",
                x.shape()
            )));
        }
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if n_classes == 0 {
            return Err(Error::InvalidArgument("n_classes must be positive".into()));
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        if let Some(bounds) = &feature_bounds {
            if bounds.len() != x.ncols() {
                return Err(Error::Shape(format!(
                    "{} bounds for {} features",
                    bounds.len(),
                    x.ncols()
                )));
            }
            if let Some(j) = bounds.iter().position(|(lo, hi)| !(lo <= hi)) {
                return Err(Error::InvalidArgument(format!("feature {j} has lo > hi")));
            }
            for i in 0..x.nrows() {
                for (j, v) in x.row(i).into_iter().enumerate() {
                    let (lo, hi) = bounds[j];
                    if v < lo || v > hi {
                        return Err(Error::InvalidValue(format!(
                            "sample {i} feature {j} = {v} outside [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            x,
            y,
            n_classes,
            feature_bounds,
        })
    }

    pub fn x(&self) -> &Tensor<T> {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_bounds(&self) -> Option<&[(T, T)]> {
        self.feature_bounds.as_deref()
    }

    pub fn sample(&self, i: usize) -> (Vec<T>, usize) {
        (self.x.row(i), self.y[i])
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n_samples()).map(|i| self.x.row(i)).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            n_classes: self.n_classes,
            feature_bounds: self.feature_bounds.clone(),
        }
    }

    /// Appends samples; bounds are dropped if a new sample violates them.
    pub fn extended(&self, rows: &[Vec<T>], labels: &[usize]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Shape("rows and labels differ in length".into()));
        }
        let x = self.x.append_rows(rows)?;
        let mut y = self.y.clone();
        y.extend_from_slice(labels);
        let bounds = self.feature_bounds.clone().filter(|b| {
            rows.iter()
                .all(|r| r.iter().zip(b).all(|(&v, &(lo, hi))| v >= lo && v <= hi))
        });
        Self::with_bounds(x, y, self.n_classes, bounds)
    }

    /// Same samples with sparse feature storage.
    pub fn to_sparse(&self) -> Self {
        Self {
            x: self.x.to_sparse(),
            ..self.clone()
        }
    }

    /// Per-feature (min, max) over the stored samples.
    pub fn column_ranges(&self) -> Vec<(T, T)> {
        let d = self.n_features();
        let mut out = vec![(T::infinity(), T::neg_infinity()); d];
        for i in 0..self.n_samples() {
            for (j, v) in self.x.row(i).into_iter().enumerate() {
                out[j].0 = out[j].0.min(v);
                out[j].1 = out[j].1.max(v);
            }
        }
        out
    }
}

/// Seeded disjoint partition into (train, test) with
/// `round(n * test_fraction)` test samples.
pub fn train_test_split<T: Scalar>(
    ds: &Dataset<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset("cannot split an empty dataset".into()));
    }
    let n = ds.n_samples();
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test, train) = idx.split_at(n_test);
    Ok((ds.subset(train), ds.subset(test)))
}
