use advsec_core::models::SavedModel;
use advsec_core::Classifier;
use serde_json::{json, Value};

use super::Session;
use crate::error::CliError;

pub fn run(s: &mut Session) -> Result<Value, CliError> {
    let model = s.model()?;
    let train_acc = model.accuracy_on(&s.train)?;
    let test_acc = model.accuracy_on(&s.test)?;
    s.run.write_json("model.json", &SavedModel::from_pipeline(&model))?;
    let metrics = json!({
        "model": model.model().spec().name(),
        "scaler": model.scaler().is_some(),
        "n_train": s.train.n_samples(),
        "n_test": s.test.n_samples(),
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
    });
    s.run.write_json("metrics.json", &metrics)?;
    log::info!("train accuracy {train_acc:.4}, test accuracy {test_acc:.4}");
    println!("train accuracy: {train_acc}");
    println!("test accuracy: {test_acc}");
    Ok(metrics)
}
