use advsec_core::attacks::security_evaluation;
use advsec_core::{Classifier, EvasionSpec};
use serde_json::{json, Value};

use super::Session;
use crate::error::CliError;
use crate::svg::{line_chart, Series};

pub fn run(s: &mut Session) -> Result<Value, CliError> {
    let a = s.cfg.attack()?;
    let solver = a.solver.to_config("attack")?;
    let grid = a.eps_grid.clone().expect("checked");
    let indices = s.attack_indices()?;
    let model = s.model()?;
    let patch = a.patch_mask(model.n_features())?;
    // untargeted, so the class argument is unused
    let loss = a.loss_for(0, model.n_classes())?.expect("untargeted");
    let spec = EvasionSpec {
        loss,
        norm: a.norm,
        epsilon: Some(0.0),
        patch_mask: patch,
        input_bounds: a.input_bounds,
    };
    spec.validate(model.n_features(), model.n_classes())
        .map_err(|e| CliError::Config(format!("attack: {e}")))?;
    let test = s.test.subset(&indices);
    log::info!(
        "security evaluation on {} samples over {} budgets ({} workers)",
        test.n_samples(),
        grid.len(),
        s.workers
    );
    let curve = security_evaluation(&model, &test, &spec, &grid, &solver, s.workers)
        .map_err(|e| match e {
            advsec_core::Error::InvalidSpec(m) if m.contains("eps_grid") => {
                CliError::Config(format!("attack.eps_grid: {m}"))
            }
            other => other.into(),
        })?;

    s.run.write("curve.csv", curve.to_csv())?;
    s.run.write("curve.json", format!("{}\n", curve.to_json()?))?;
    let acc: Vec<(f64, f64)> = curve.eps_grid.iter().copied().zip(curve.accuracy_at_eps.iter().copied()).collect();
    let drop: Vec<(f64, f64)> = curve.eps_grid.iter().copied().zip(curve.mean_confidence_drop.iter().copied()).collect();
    s.run.write(
        "plots/curve.svg",
        line_chart("security evaluation curve", "epsilon", "accuracy", &[Series::new("accuracy", acc)]),
    )?;
    s.run.write(
        "plots/confidence_drop.svg",
        line_chart(
            "true-class score drop",
            "epsilon",
            "mean score drop",
            &[Series::new("mean confidence drop", drop)],
        ),
    )?;
    for (e, acc) in curve.eps_grid.iter().zip(&curve.accuracy_at_eps) {
        println!("eps {e}: accuracy {acc}");
    }
    Ok(json!({
        "n_samples": test.n_samples(),
        "eps_grid": curve.eps_grid,
        "accuracy_at_eps": curve.accuracy_at_eps,
    }))
}
