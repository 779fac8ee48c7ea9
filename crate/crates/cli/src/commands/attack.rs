use advsec_core::attacks::{derive_seed, run_evasion};
use advsec_core::models::argmax;
use advsec_core::optim::SolverMethod;
use advsec_core::parallel::parallel_map;
use advsec_core::{AttackResult, Classifier, EvasionSpec, SolverConfig};
use serde::Serialize;
use serde_json::{json, Value};

use super::Session;
use crate::error::CliError;
use crate::output::RunDir;
use crate::svg::{line_chart, Series};

/// One attacked sample as written to `traces/`.
#[derive(Debug, Serialize)]
struct SampleRecord {
    sample_index: usize,
    true_label: usize,
    target_label: Option<usize>,
    success: bool,
    initial_label: usize,
    final_label: usize,
    x_adv: Vec<f64>,
    trace: advsec_core::SolverTrace,
    per_iteration_scores: Vec<Vec<f64>>,
}

struct Job {
    index: usize,
    label: usize,
    spec: EvasionSpec,
    solver: SolverConfig,
}

pub fn run(s: &mut Session) -> Result<Value, CliError> {
    let a = s.cfg.attack()?;
    let base_solver = a.solver.to_config("attack")?;
    let indices = s.attack_indices()?;
    let model = s.model()?;
    let n_classes = model.n_classes();
    let patch = a.patch_mask(model.n_features())?;

    let mut jobs = Vec::with_capacity(indices.len());
    for &i in &indices {
        let y = s.test.y()[i];
        let Some(loss) = a.loss_for(y, n_classes)? else {
            log::warn!("sample {i}: true class equals the target, skipped");
            continue;
        };
        let spec = EvasionSpec {
            loss,
            norm: a.norm,
            epsilon: a.epsilon,
            patch_mask: patch.clone(),
            input_bounds: a.input_bounds,
        };
        if spec.patch_mask.is_none() && spec.epsilon.is_none() {
            return Err(CliError::Config("attack.epsilon: required without a patch".into()));
        }
        spec.validate(model.n_features(), n_classes)
            .map_err(|e| CliError::Config(format!("attack: {e}")))?;
        let solver = match base_solver.method {
            SolverMethod::RandomSearch { seed, .. } => base_solver.clone().with_seed(derive_seed(seed, &[i as u64])),
            _ => base_solver.clone(),
        };
        jobs.push(Job {
            index: i,
            label: y,
            spec,
            solver,
        });
    }
    log::info!(
        "attacking {} samples with {} ({} workers)",
        jobs.len(),
        base_solver.method.name(),
        s.workers
    );

    let test = &s.test;
    let results: Vec<AttackResult> = parallel_map(&jobs, s.workers, |_, job| {
        let (x, y) = test.sample(job.index);
        run_evasion(&model, &x, y, &job.spec, &job.solver)
    })
    .map_err(|e| match e {
        advsec_core::Error::Sample { index, source } => {
            CliError::Runtime(anyhow::anyhow!("test sample {}: {source}", jobs[index].index))
        }
        other => other.into(),
    })?;

    let mut summary = Vec::with_capacity(jobs.len());
    let mut n_success = 0;
    for (job, r) in jobs.iter().zip(results) {
        let y = job.label;
        let target = job.spec.loss.target_label;
        n_success += usize::from(r.success);
        write_plots(&mut s.run, job.index, y, target, &r)?;
        summary.push(json!({
            "sample_index": job.index,
            "true_label": y,
            "target_label": target,
            "success": r.success,
            "final_label": r.final_label,
            "initial_loss": r.trace.first_loss(),
            "final_loss": r.trace.final_loss(),
            "n_fun_evals": r.trace.n_fun_evals,
            "n_grad_evals": r.trace.n_grad_evals,
            "stop_reason": r.trace.stop_reason,
        }));
        let record = SampleRecord {
            sample_index: job.index,
            true_label: y,
            target_label: target,
            success: r.success,
            initial_label: r.initial_label,
            final_label: r.final_label,
            x_adv: r.x_adv,
            trace: r.trace,
            per_iteration_scores: r.per_iteration_scores,
        };
        s.run.write_json(&format!("traces/sample_{}.json", job.index), &record)?;
    }
    let n = jobs.len();
    let results = json!({
        "n_attacked": n,
        "n_success": n_success,
        "success_rate": if n == 0 { 0.0 } else { n_success as f64 / n as f64 },
        "solver": base_solver.method.name(),
    });
    s.run.write_json(
        "attack_summary.json",
        &json!({ "summary": results, "samples": summary }),
    )?;
    log::info!("success {n_success}/{n}");
    println!("success: {n_success}/{n}");
    Ok(results)
}

/// Class compared against the source class in the score plot.
fn rival_class(y: usize, target: Option<usize>, r: &AttackResult) -> usize {
    if let Some(t) = target {
        return t;
    }
    if r.final_label != y {
        return r.final_label;
    }
    let last = r.per_iteration_scores.last().cloned().unwrap_or_default();
    let masked: Vec<f64> = last
        .iter()
        .enumerate()
        .map(|(k, &v)| if k == y { f64::NEG_INFINITY } else { v })
        .collect();
    argmax(&masked)
}

fn write_plots(run: &mut RunDir, index: usize, y: usize, target: Option<usize>, r: &AttackResult) -> Result<(), CliError> {
    let loss = line_chart(
        &format!("sample {index}: attack loss"),
        "iteration",
        "loss",
        &[Series::indexed("loss", &r.trace.losses)],
    );
    run.write(&format!("plots/sample_{index}_loss.svg"), loss)?;

    let rival = rival_class(y, target, r);
    let column = |k: usize| -> Vec<f64> { r.per_iteration_scores.iter().map(|row| row[k]).collect() };
    let kind = if target.is_some() { "target" } else { "runner-up" };
    let scores = line_chart(
        &format!("sample {index}: class scores"),
        "iteration",
        "score",
        &[
            Series::indexed(format!("source class {y}"), &column(y)).dashed(),
            Series::indexed(format!("{kind} class {rival}"), &column(rival)),
        ],
    );
    run.write(&format!("plots/sample_{index}_scores.svg"), scores)?;
    Ok(())
}
