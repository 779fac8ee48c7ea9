//! Experiment configuration (TOML, unknown keys rejected).

use std::path::{Path, PathBuf};

use advsec_core::models::{LossKind, LossSpec};
use advsec_core::optim::{SolverConfig, SolverMethod, DEFAULT_MAX_ITER};
use advsec_core::tensor::Norm;
use advsec_core::{Dataset, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetBlock,
    pub model: ModelBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poison: Option<PoisonBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explain: Option<ExplainBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Blobs,
    Moons,
    Plates,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Zero-based label column of the CSV file; the last column if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<usize>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Blob centers, one per class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_samples() -> usize {
    200
}

fn default_test_fraction() -> f64 {
    0.3
}

/// `kind` plus the hyperparameters of that kind, or `path` to a saved model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "toml::Table")]
pub struct ModelBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(flatten)]
    pub spec: Option<ModelSpec>,
    pub scaler: bool,
}

impl TryFrom<toml::Table> for ModelBlock {
    type Error = String;

    fn try_from(mut table: toml::Table) -> Result<Self, String> {
        let path = match table.remove("path") {
            None => None,
            Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => return Err(format!("model.path: expected a string, got {}", other.type_str())),
        };
        let scaler = match table.remove("scaler") {
            None => false,
            Some(toml::Value::Boolean(b)) => b,
            Some(other) => return Err(format!("model.scaler: expected a boolean, got {}", other.type_str())),
        };
        let spec = if table.is_empty() {
            None
        } else {
            if path.is_some() {
                return Err("model: path excludes kind and hyperparameters".into());
            }
            let spec = ModelSpec::deserialize(toml::Value::Table(table)).map_err(|e| format!("model: {}", e.message()))?;
            Some(spec)
        };
        Ok(Self { path, spec, scaler })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetChoice {
    Label(usize),
    /// `"next"`: class `(y + 1) mod n_classes` for a sample of class `y`.
    Rule(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatchChoice {
    /// `"plate"`: the plate region of the plates generator.
    Named(String),
    Mask(Vec<bool>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackBlock {
    #[serde(default = "default_loss")]
    pub loss: LossKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetChoice>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_norm")]
    pub norm: Norm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<PatchChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_bounds: Option<(f64, f64)>,
    /// Test-set indices to attack; the first `n_attack` (or all) otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_attack: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    pub solver: SolverBlock,
}

fn default_loss() -> LossKind {
    LossKind::CrossEntropy
}

fn default_norm() -> Norm {
    Norm::L2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    Pgd,
    PgdLs,
    RandomSearch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub solver: SolverName,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub stop_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fun_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ls_max_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ls_min_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureBox {
    /// `"data"`: the per-feature range of the training set.
    Named(String),
    Bounds(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoisonBlock {
    pub n_poison: usize,
    pub poison_label: usize,
    #[serde(default = "default_feature_box")]
    pub feature_box: FeatureBox,
    #[serde(default)]
    pub seed: u64,
    pub solver: SolverBlock,
}

fn default_feature_box() -> FeatureBox {
    FeatureBox::Named("data".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplainKind {
    IntegratedGradients,
    LinearSurrogate,
    Influence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaselineChoice {
    /// `"zeros"`, in raw input space.
    Named(String),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainBlock {
    pub method: ExplainKind,
    /// Test-set index of the explained sample.
    #[serde(default)]
    pub sample: usize,
    /// Explained class; the predicted class if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_class: Option<usize>,
    #[serde(default = "default_m_steps")]
    pub m_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineChoice>,
    #[serde(default = "default_surrogate_samples")]
    pub n_samples: usize,
    #[serde(default = "default_kernel_width")]
    pub kernel_width: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_m_steps() -> usize {
    300
}

fn default_surrogate_samples() -> usize {
    2000
}

fn default_kernel_width() -> f64 {
    1.0
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{name}: {msg}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.dataset.csv.as_mut() {
            fix(p);
        }
        if let Some(p) = self.model.path.as_mut() {
            fix(p);
        }
    }

    /// Replaces every seed in the configuration.
    pub fn override_seeds(&mut self, seed: u64) {
        self.dataset.seed = seed;
        if let Some(spec) = self.model.spec.as_mut() {
            match spec {
                ModelSpec::Mlp { seed: s, .. } | ModelSpec::RandomForest { seed: s, .. } => *s = seed,
                _ => {}
            }
        }
        if let Some(a) = self.attack.as_mut() {
            if a.solver.solver == SolverName::RandomSearch {
                a.solver.seed = Some(seed);
            }
        }
        if let Some(p) = self.poison.as_mut() {
            p.seed = seed;
            if p.solver.solver == SolverName::RandomSearch {
                p.solver.seed = Some(seed);
            }
        }
        if let Some(e) = self.explain.as_mut() {
            e.seed = seed;
        }
    }

    /// Checks structural requirements that do not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        let ds = &self.dataset;
        match (ds.generator, &ds.csv) {
            (None, None) => return Err(field("dataset", "needs either generator or csv")),
            (Some(_), Some(_)) => return Err(field("dataset", "generator and csv are exclusive")),
            (None, Some(p)) if !p.exists() => {
                return Err(field("dataset.csv", format!("file {} does not exist", p.display())))
            }
            _ => {}
        }
        if !(ds.test_fraction > 0.0 && ds.test_fraction < 1.0) {
            return Err(field("dataset.test_fraction", "must lie in (0, 1)"));
        }
        match (&self.model.path, &self.model.spec) {
            (None, None) => return Err(field("model", "needs either path or kind")),
            (Some(_), Some(_)) => return Err(field("model", "path and kind are exclusive")),
            (Some(p), None) if !p.exists() => {
                return Err(field("model.path", format!("file {} does not exist", p.display())))
            }
            (None, Some(spec)) => spec.validate().map_err(|e| field("model", e))?,
            _ => {}
        }
        if self.workers == Some(0) {
            return Err(field("workers", "must be positive"));
        }
        Ok(())
    }

    pub fn attack(&self) -> Result<&AttackBlock, CliError> {
        self.attack.as_ref().ok_or_else(|| field("attack", "block is required by this command"))
    }

    pub fn poison(&self) -> Result<&PoisonBlock, CliError> {
        self.poison.as_ref().ok_or_else(|| field("poison", "block is required by this command"))
    }

    pub fn explain(&self) -> Result<&ExplainBlock, CliError> {
        self.explain.as_ref().ok_or_else(|| field("explain", "block is required by this command"))
    }

    /// Generated or loaded data set.
    pub fn load_dataset(&self) -> Result<Dataset, CliError> {
        use advsec_core::tensor::{load_csv, make_blobs, make_moons, make_plates};
        let ds = &self.dataset;
        let runtime = |e: advsec_core::Error| field("dataset", e);
        if let Some(path) = &ds.csv {
            let label_column = match ds.label_column {
                Some(c) => c,
                None => last_column(path)?,
            };
            return load_csv(path, label_column).map_err(runtime);
        }
        match ds.generator.expect("validated") {
            Generator::Blobs => {
                let centers = ds
                    .centers
                    .clone()
                    .unwrap_or_else(|| vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
                make_blobs(ds.n_samples, &centers, ds.spread.unwrap_or(0.5), ds.seed).map_err(runtime)
            }
            Generator::Moons => make_moons(ds.n_samples, ds.noise.unwrap_or(0.1), ds.seed).map_err(runtime),
            Generator::Plates => {
                make_plates(ds.n_samples, ds.n_classes.unwrap_or(4), ds.noise.unwrap_or(0.1), ds.seed).map_err(runtime)
            }
        }
    }
}

fn last_column(path: &Path) -> Result<usize, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| field("dataset.csv", e))?;
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| field("dataset.csv", "file is empty"))?;
    Ok(first.split(',').count().saturating_sub(1))
}

impl SolverBlock {
    /// Solver configuration; method-specific fields must match `solver`.
    pub fn to_config(&self, prefix: &str) -> Result<SolverConfig<f64>, CliError> {
        let name = format!("{prefix}.solver");
        let present = [
            ("step_size", self.step_size.is_some()),
            ("ls_max_evals", self.ls_max_evals.is_some()),
            ("ls_min_step", self.ls_min_step.is_some()),
            ("sigma", self.sigma.is_some()),
            ("trials", self.trials.is_some()),
            ("seed", self.seed.is_some()),
        ];
        let allowed: &[&str] = match self.solver {
            SolverName::Pgd => &["step_size"],
            SolverName::PgdLs => &["ls_max_evals", "ls_min_step"],
            SolverName::RandomSearch => &["sigma", "trials", "seed"],
        };
        if let Some((k, _)) = present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
            return Err(field(&format!("{name}.{k}"), "not used by this solver"));
        }
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| field(&format!("{name}.{k}"), "is required"));
        let method = match self.solver {
            SolverName::Pgd => SolverMethod::Pgd {
                step_size: need(self.step_size, "step_size")?,
            },
            SolverName::PgdLs => SolverMethod::PgdLs {
                ls_max_evals: self.ls_max_evals.ok_or_else(|| field(&format!("{name}.ls_max_evals"), "is required"))?,
                ls_min_step: need(self.ls_min_step, "ls_min_step")?,
            },
            SolverName::RandomSearch => SolverMethod::RandomSearch {
                sigma: need(self.sigma, "sigma")?,
                trials: self.trials.ok_or_else(|| field(&format!("{name}.trials"), "is required"))?,
                seed: self.seed.unwrap_or(0),
            },
        };
        let cfg = SolverConfig {
            method,
            max_iter: self.max_iter,
            stop_tol: self.stop_tol,
            max_fun_evals: self.max_fun_evals,
        };
        cfg.validate().map_err(|e| field(&name, e))?;
        Ok(cfg)
    }
}

impl AttackBlock {
    /// Loss for a sample of class `y`, or `None` when the fixed target equals `y`.
    pub fn loss_for(&self, y: usize, n_classes: usize) -> Result<Option<LossSpec<f64>>, CliError> {
        let target = match &self.target {
            None => None,
            Some(TargetChoice::Label(t)) => {
                if *t >= n_classes {
                    return Err(field("attack.target", format!("{t} out of range for {n_classes} classes")));
                }
                if *t == y {
                    return Ok(None);
                }
                Some(*t)
            }
            Some(TargetChoice::Rule(r)) if r == "next" => Some((y + 1) % n_classes),
            Some(TargetChoice::Rule(r)) => return Err(field("attack.target", format!("unknown rule {r:?}"))),
        };
        if self.loss == LossKind::CwLogitDiff && target.is_none() {
            return Err(field("attack.target", "cw-logit-diff loss needs a target"));
        }
        Ok(Some(LossSpec {
            kind: self.loss,
            target_label: target,
            kappa: self.kappa,
        }))
    }

    pub fn patch_mask(&self, n_features: usize) -> Result<Option<Vec<bool>>, CliError> {
        match &self.patch {
            None => Ok(None),
            Some(PatchChoice::Mask(m)) if m.len() == n_features => Ok(Some(m.clone())),
            Some(PatchChoice::Mask(m)) => Err(field(
                "attack.patch",
                format!("mask has {} entries for {n_features} features", m.len()),
            )),
            Some(PatchChoice::Named(n)) if n == "plate" => {
                let mask = advsec_core::tensor::plate_mask();
                if mask.len() != n_features {
                    return Err(field("attack.patch", "plate mask needs plates data"));
                }
                Ok(Some(mask))
            }
            Some(PatchChoice::Named(n)) => Err(field("attack.patch", format!("unknown patch {n:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    const BASE: &str = r#"
[dataset]
generator = "blobs"
[model]
kind = "logreg"
lambda = 0.1
"#;

    #[test]
    fn minimal_config() {
        let cfg = parse(BASE).unwrap();
        assert!(cfg.validate().is_ok());
        assert!(matches!(cfg.model.spec, Some(ModelSpec::Logreg { .. })));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(&format!("{BASE}\nbogus = 1\n")).unwrap_err();
        assert!(err.contains("bogus"), "{err}");
        let err = parse(&BASE.replace("generator", "generatr")).unwrap_err();
        assert!(err.contains("generatr"), "{err}");
    }

    #[test]
    fn missing_model_is_named() {
        let err = parse("[dataset]\ngenerator = \"moons\"\n").unwrap_err();
        assert!(err.contains("model"), "{err}");
    }

    #[test]
    fn solver_fields_must_match() {
        let block: SolverBlock = toml::from_str("solver = \"pgd\"\nstep_size = 0.1\nsigma = 0.3\n").unwrap();
        let err = block.to_config("attack").unwrap_err().to_string();
        assert!(err.contains("attack.solver.sigma"), "{err}");
        let block: SolverBlock = toml::from_str("solver = \"pgd-ls\"\nls_max_evals = 10\n").unwrap();
        assert!(block.to_config("attack").unwrap_err().to_string().contains("ls_min_step"));
    }

    #[test]
    fn next_target_rule() {
        let block: AttackBlock = toml::from_str(
            "loss = \"cw-logit-diff\"\ntarget = \"next\"\nepsilon = 1.0\n[solver]\nsolver = \"pgd\"\nstep_size = 0.1\n",
        )
        .unwrap();
        assert_eq!(block.loss_for(3, 4).unwrap().unwrap().target_label, Some(0));
    }
}
