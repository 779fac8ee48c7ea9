//! Subcommand implementations sharing data and model setup.

mod attack;
mod explain;
mod poison;
mod seceval;
mod train;

use std::collections::BTreeMap;
use std::path::Path;

use advsec_core::models::{chain, fit, fit_scaler, load_pipeline, Pipeline};
use advsec_core::tensor::train_test_split;
use advsec_core::{Classifier, Dataset, ModelSpec};

use crate::config::{ExperimentConfig, SolverName};
use crate::error::CliError;
use crate::output::{RunDir, LOG_FILE};

/// Shared state of one command run.
pub struct Session<'a> {
    pub cfg: &'a ExperimentConfig,
    pub run: RunDir,
    pub workers: usize,
    pub train: Dataset,
    pub test: Dataset,
}

/// Fails with a config error when a block needed by `command` is missing.
pub fn check_blocks(command: &str, cfg: &ExperimentConfig) -> Result<(), CliError> {
    match command {
        "attack" => cfg.attack().map(drop),
        "seceval" => {
            let a = cfg.attack()?;
            if a.eps_grid.is_none() {
                return Err(CliError::Config("attack.eps_grid: required by seceval".into()));
            }
            if a.target.is_some() {
                return Err(CliError::Config("attack.target: seceval runs untargeted attacks only".into()));
            }
            Ok(())
        }
        "poison" => {
            cfg.poison()?;
            if cfg.model.spec.is_none() {
                return Err(CliError::Config("model: poisoning needs a model kind, not a path".into()));
            }
            if cfg.model.scaler {
                return Err(CliError::Config("model.scaler: not supported for poisoning".into()));
            }
            Ok(())
        }
        "explain" => cfg.explain().map(drop),
        _ => Ok(()),
    }
}

pub fn execute(command: &str, cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<(), CliError> {
    let run = RunDir::create(out)?;
    crate::logging::attach_file(&run.root().join(LOG_FILE))?;
    log::info!("advsec {command} (library {})", env!("CARGO_PKG_VERSION"));

    let data = cfg.load_dataset()?;
    let (train, test) = train_test_split(&data, cfg.dataset.test_fraction, cfg.dataset.seed)
        .map_err(|e| CliError::Config(format!("dataset: {e}")))?;
    log::info!(
        "data: {} train / {} test samples, {} features, {} classes",
        train.n_samples(),
        test.n_samples(),
        train.n_features(),
        train.n_classes()
    );
    let mut session = Session {
        cfg,
        run,
        workers,
        train,
        test,
    };
    let results = match command {
        "train" => train::run(&mut session)?,
        "attack" => attack::run(&mut session)?,
        "seceval" => seceval::run(&mut session)?,
        "poison" => poison::run(&mut session)?,
        "explain" => explain::run(&mut session)?,
        other => return Err(CliError::Config(format!("unknown command {other}"))),
    };
    let echo = serde_json::to_value(cfg)?;
    let manifest = session
        .run
        .finish(command, &echo, &seeds(cfg), workers, &results)?;
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn seeds(cfg: &ExperimentConfig) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    out.insert("dataset".to_string(), cfg.dataset.seed);
    match &cfg.model.spec {
        Some(ModelSpec::Mlp { seed, .. }) | Some(ModelSpec::RandomForest { seed, .. }) => {
            out.insert("model".into(), *seed);
        }
        _ => {}
    }
    if let Some(a) = &cfg.attack {
        if a.solver.solver == SolverName::RandomSearch {
            out.insert("attack.solver".into(), a.solver.seed.unwrap_or(0));
        }
    }
    if let Some(p) = &cfg.poison {
        out.insert("poison".into(), p.seed);
        if p.solver.solver == SolverName::RandomSearch {
            out.insert("poison.solver".into(), p.solver.seed.unwrap_or(0));
        }
    }
    if let Some(e) = &cfg.explain {
        out.insert("explain".into(), e.seed);
    }
    out
}

impl Session<'_> {
    /// Loads the saved model or fits the configured one on the training split.
    pub fn model(&self) -> Result<Pipeline<f64>, CliError> {
        let block = &self.cfg.model;
        let pipeline = if let Some(path) = &block.path {
            log::info!("loading model {}", path.display());
            load_pipeline(path)?
        } else {
            let spec = block.spec.as_ref().expect("validated");
            log::info!("fitting {} on {} samples", spec.name(), self.train.n_samples());
            if block.scaler {
                let scaler = fit_scaler(&self.train)?;
                let model = fit(spec, &scaler.transform_dataset(&self.train)?)?;
                Pipeline::Chain(chain(model, scaler)?)
            } else {
                Pipeline::Bare(fit(spec, &self.train)?)
            }
        };
        if pipeline.n_features() != self.train.n_features() || pipeline.n_classes() != self.train.n_classes() {
            return Err(CliError::Config(format!(
                "model: expects {} features / {} classes, data has {} / {}",
                pipeline.n_features(),
                pipeline.n_classes(),
                self.train.n_features(),
                self.train.n_classes()
            )));
        }
        Ok(pipeline)
    }

    /// Test-set indices selected by the attack block.
    pub fn attack_indices(&self) -> Result<Vec<usize>, CliError> {
        let a = self.cfg.attack()?;
        let n = self.test.n_samples();
        let idx = match (&a.samples, a.n_attack) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("attack: samples and n_attack are exclusive".into()))
            }
            (Some(s), None) => s.clone(),
            (None, Some(k)) => (0..k.min(n)).collect(),
            (None, None) => (0..n).collect(),
        };
        if let Some(bad) = idx.iter().find(|&&i| i >= n) {
            return Err(CliError::Config(format!(
                "attack.samples: index {bad} out of range for {n} test samples"
            )));
        }
        Ok(idx)
    }
}

/// Renders `value` with `-0` printed as `0`.
pub fn csv_number(value: f64) -> String {
    format!("{}", value + 0.0)
}
