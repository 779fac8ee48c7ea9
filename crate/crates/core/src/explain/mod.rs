//! Feature attributions and training-point influence.

mod gradients;
mod influence;
mod surrogate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use gradients::integrated_gradients;
pub use influence::{influence, InfluenceResult};
pub use surrogate::{linear_surrogate, SurrogateSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplainMethod {
    IntegratedGradients,
    LinearSurrogate,
}

/// Signed per-feature relevance for one class score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution<T> {
    pub per_feature: Vec<T>,
    pub baseline: Vec<T>,
    pub target_class: usize,
    pub method: ExplainMethod,
}

impl<T: Scalar> Attribution<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature_index,score\n");
        for (i, v) in self.per_feature.iter().enumerate() {
            // adding zero turns -0 into 0
            out.push_str(&format!("{i},{}\n", *v + T::zero()));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}
