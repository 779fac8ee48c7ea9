use advsec_core::explain::{influence, integrated_gradients, linear_surrogate, SurrogateSettings};
use advsec_core::{Attribution, Classifier};
use serde_json::{json, Value};

use super::{csv_number, Session};
use crate::config::{BaselineChoice, ExplainKind};
use crate::error::CliError;
use crate::svg::bar_chart;

pub fn run(s: &mut Session) -> Result<Value, CliError> {
    let e = s.cfg.explain()?;
    if e.sample >= s.test.n_samples() {
        return Err(CliError::Config(format!(
            "explain.sample: index {} out of range for {} test samples",
            e.sample,
            s.test.n_samples()
        )));
    }
    let (x, y) = s.test.sample(e.sample);
    if e.method == ExplainKind::Influence {
        return run_influence(s, &x, y);
    }
    let model = s.model()?;
    let target = match e.target_class {
        Some(t) if t >= model.n_classes() => {
            return Err(CliError::Config(format!("explain.target_class: {t} out of range")))
        }
        Some(t) => t,
        None => model.predict(&x)?,
    };
    let attribution = match e.method {
        ExplainKind::IntegratedGradients => {
            let baseline = match &e.baseline {
                None => vec![0.0; x.len()],
                Some(BaselineChoice::Named(n)) if n == "zeros" => vec![0.0; x.len()],
                Some(BaselineChoice::Named(n)) => {
                    return Err(CliError::Config(format!("explain.baseline: unknown baseline {n:?}")))
                }
                Some(BaselineChoice::Point(b)) if b.len() == x.len() => b.clone(),
                Some(BaselineChoice::Point(b)) => {
                    return Err(CliError::Config(format!(
                        "explain.baseline: {} values for {} features",
                        b.len(),
                        x.len()
                    )))
                }
            };
            integrated_gradients(&model, &x, &baseline, target, e.m_steps)?
        }
        ExplainKind::LinearSurrogate => {
            let ranges = s
                .train
                .column_ranges()
                .into_iter()
                .map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
                .collect();
            let settings = SurrogateSettings {
                n_samples: e.n_samples,
                kernel_width: e.kernel_width,
                seed: e.seed,
                ranges: Some(ranges),
            };
            linear_surrogate(&model, &x, target, &settings)?
        }
        ExplainKind::Influence => unreachable!(),
    };
    write_attribution(s, &attribution)?;
    println!("explained sample {} (class {target})", e.sample);
    Ok(json!({
        "sample": e.sample,
        "true_label": y,
        "target_class": target,
        "method": attribution.method,
        "total": attribution.per_feature.iter().sum::<f64>(),
    }))
}

fn write_attribution(s: &mut Session, a: &Attribution) -> Result<(), CliError> {
    s.run.write("attribution.csv", a.to_csv())?;
    s.run.write("attribution.json", format!("{}\n", a.to_json()?))?;
    let bars: Vec<(String, f64)> = a
        .per_feature
        .iter()
        .enumerate()
        .map(|(i, &v)| (i.to_string(), v))
        .collect();
    s.run.write(
        "plots/attribution.svg",
        bar_chart(
            &format!("attribution for class {}", a.target_class),
            "feature",
            "relevance",
            "relevance",
            &bars,
        ),
    )?;
    Ok(())
}

fn run_influence(s: &mut Session, x: &[f64], y: usize) -> Result<Value, CliError> {
    let e = s.cfg.explain()?;
    let Some(victim) = s.cfg.model.spec.clone() else {
        return Err(CliError::Config("model: influence needs a model kind, not a path".into()));
    };
    if s.cfg.model.scaler {
        return Err(CliError::Config("model.scaler: not supported for influence".into()));
    }
    let result = influence(&victim, &s.train, x, y)?;
    let mut csv = String::from("train_index,influence\n");
    for (i, v) in result.per_training_point.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", csv_number(*v)));
    }
    s.run.write("influence.csv", csv)?;
    s.run.write("influence.json", format!("{}\n", result.to_json()?))?;
    let bars: Vec<(String, f64)> = result
        .per_training_point
        .iter()
        .enumerate()
        .map(|(i, &v)| (i.to_string(), v))
        .collect();
    s.run.write(
        "plots/influence.svg",
        bar_chart("training-point influence", "training index", "influence", "influence", &bars),
    )?;
    let ranking = result.ranking();
    println!("most influential training points: {:?}", &ranking[..ranking.len().min(5)]);
    Ok(json!({
        "sample": e.sample,
        "true_label": y,
        "method": "influence",
        "top_training_points": &ranking[..ranking.len().min(10)],
    }))
}
