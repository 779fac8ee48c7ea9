use advsec_core::attacks::run_poisoning;
use advsec_core::PoisoningSpec;
use serde_json::{json, Value};

use super::{csv_number, Session};
use crate::config::FeatureBox;
use crate::error::CliError;
use crate::svg::{line_chart, Series};

pub fn run(s: &mut Session) -> Result<Value, CliError> {
    let p = s.cfg.poison()?;
    let victim = s.cfg.model.spec.clone().expect("checked");
    let feature_box = match &p.feature_box {
        FeatureBox::Named(n) if n == "data" => s.train.column_ranges(),
        FeatureBox::Named(n) => {
            return Err(CliError::Config(format!("poison.feature_box: unknown box {n:?}")))
        }
        FeatureBox::Bounds(b) => b.clone(),
    };
    let spec = PoisoningSpec {
        victim,
        n_poison: p.n_poison,
        poison_label: p.poison_label,
        feature_box,
        solver: p.solver.to_config("poison")?,
        seed: p.seed,
    };
    spec.validate(&s.train)
        .map_err(|e| CliError::Config(format!("poison: {e}")))?;
    log::info!(
        "poisoning {} with {} points of class {}",
        spec.victim.name(),
        spec.n_poison,
        spec.poison_label
    );
    // the held-out split doubles as the validation set
    let result = run_poisoning(&spec, &s.train, &s.test)?;

    let d = s.train.n_features();
    let mut csv: String = (0..d).map(|j| format!("x{j},")).collect();
    csv.push_str("label\n");
    for (x, y) in result.poison_points.iter().zip(&result.poison_labels) {
        for v in x {
            csv.push_str(&csv_number(*v));
            csv.push(',');
        }
        csv.push_str(&format!("{y}\n"));
    }
    s.run.write("poison_points.csv", csv)?;
    for (k, trace) in result.traces.iter().enumerate() {
        s.run.write_json(&format!("traces/poison_{k}.json"), trace)?;
        s.run.write(
            &format!("plots/poison_{k}_loss.svg"),
            line_chart(
                &format!("poison point {k}"),
                "iteration",
                "negated validation loss",
                &[Series::indexed("objective", &trace.losses)],
            ),
        )?;
    }
    let summary = json!({
        "victim": spec.victim.name(),
        "n_poison": spec.n_poison,
        "poison_label": spec.poison_label,
        "n_train": s.train.n_samples(),
        "n_validation": s.test.n_samples(),
        "val_accuracy_before": result.val_accuracy_before,
        "val_accuracy_after": result.val_accuracy_after,
    });
    s.run.write_json("poison_summary.json", &summary)?;
    println!("validation accuracy before: {}", result.val_accuracy_before);
    println!("validation accuracy after: {}", result.val_accuracy_after);
    Ok(summary)
}
