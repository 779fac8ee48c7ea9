//! Versioned, self-describing JSON model files.
//!
//! ```json
//! {"format": "advsec-model", "version": 1,
//!  "scaler": null | {"mins": [...], "maxs": [...]},
//!  "model": {"spec": {"kind": "logreg", ...}, "n_classes": 2, "n_features": 2,
//!            "params": {"family": "linear", ...}}}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MinMaxScaler, ModuleChain, Pipeline, TrainedModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "advsec-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedModel<T> {
    pub format: String,
    pub version: u32,
    pub scaler: Option<MinMaxScaler<T>>,
    pub model: TrainedModel<T>,
}

impl<T: Scalar> SavedModel<T> {
    pub fn from_pipeline(p: &Pipeline<T>) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            scaler: p.scaler().cloned(),
            model: p.model().clone(),
        }
    }

    pub fn into_pipeline(self) -> Result<Pipeline<T>> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Serialization(format!(
                "unknown model format {:?}",
                self.format
            )));
        }
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model file version {}",
                self.version
            )));
        }
        Ok(match self.scaler {
            Some(scaler) => Pipeline::Chain(super::chain(self.model, scaler)?),
            None => Pipeline::Bare(self.model),
        })
    }
}

pub fn save_pipeline<T: Scalar>(p: &Pipeline<T>, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&SavedModel::from_pipeline(p))
        .map_err(|e| Error::Serialization(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_pipeline<T: Scalar>(path: impl AsRef<Path>) -> Result<Pipeline<T>> {
    let text = std::fs::read_to_string(path)?;
    let saved: SavedModel<T> =
        serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))?;
    saved.into_pipeline()
}

impl<T: Scalar> From<ModuleChain<T>> for Pipeline<T> {
    fn from(c: ModuleChain<T>) -> Self {
        Self::Chain(c)
    }
}

impl<T: Scalar> From<TrainedModel<T>> for Pipeline<T> {
    fn from(m: TrainedModel<T>) -> Self {
        Self::Bare(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, fit_scaler, ModelSpec};
    use crate::tensor::make_moons;

    #[test]
    fn file_round_trip_preserves_predictions() {
        let ds = make_moons(40, 0.1, 2).unwrap();
        let spec = ModelSpec::RandomForest {
            n_trees: 3,
            max_depth: 4,
            seed: 1,
        };
        let scaler = fit_scaler(&ds).unwrap();
        let m = fit(&spec, &scaler.transform_dataset(&ds).unwrap()).unwrap();
        let p: Pipeline<f64> = crate::models::chain(m, scaler).unwrap().into();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_pipeline(&p, &path).unwrap();
        assert_eq!(load_pipeline::<f64>(&path).unwrap(), p);
    }

    #[test]
    fn rejects_wrong_version() {
        let m = crate::models::TrainedModel::linear(
            ModelSpec::Logreg { lambda: 1.0 },
            vec![vec![1.0], vec![0.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let mut saved = SavedModel::from_pipeline(&Pipeline::Bare(m));
        saved.version = 99;
        assert!(matches!(
            saved.into_pipeline(),
            Err(Error::Serialization(_))
        ));
    }
}
