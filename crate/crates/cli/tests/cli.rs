use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use advsec_core::models::load_pipeline;
use advsec_core::tensor::{make_blobs, train_test_split};
use advsec_core::Classifier;
use serde_json::Value;

const BLOBS: &str = r#"
[dataset]
generator = "blobs"
n_samples = 120
centers = [[-1.0, 0.0], [1.0, 0.0]]
spread = 0.6
seed = 4

[model]
kind = "logreg"
lambda = 0.1
"#;

const ATTACK: &str = r#"
[attack]
loss = "cross-entropy"
norm = "l2"
epsilon = 0.0
n_attack = 8

[attack.solver]
solver = "pgd"
step_size = 0.5
max_iter = 20
"#;

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn advsec(command: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advsec"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn listed(m: &Value) -> Vec<String> {
    m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn train_writes_model_and_manifest() {
    let run = Run::new();
    let cfg = run.config("c.toml", BLOBS);
    let o = advsec("train", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("test accuracy:"));
    let m = manifest(&run.out("a"));
    assert_eq!(m["command"], "train");
    assert!(m["wall_clock_seconds"].is_number());
    assert!(listed(&m).contains(&"model.json".to_string()));
    assert!(listed(&m).contains(&"run.log".to_string()));
    let log = std::fs::read_to_string(run.out("a").join("run.log")).unwrap();
    assert!(log.lines().all(|l| l.starts_with('[')), "{log}");

    let again = advsec("train", &cfg, &run.out("b"));
    assert_eq!(again.status.code(), Some(0));
    let hash = |m: &Value| {
        m["files"]
            .as_array()
            .unwrap()
            .iter()
            .find(|f| f["path"] == "model.json")
            .unwrap()["sha256"]
            .clone()
    };
    assert_eq!(hash(&m), hash(&manifest(&run.out("b"))));
}

#[test]
fn missing_model_block_is_a_config_error() {
    let run = Run::new();
    let cfg = run.config("c.toml", "[dataset]\ngenerator = \"moons\"\n");
    let o = advsec("train", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_config_error() {
    let run = Run::new();
    let cfg = run.config("c.toml", &BLOBS.replace("lambda = 0.1", "lambda = 0.1\nlamda = 2.0"));
    let o = advsec("train", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lamda"), "{}", stderr(&o));

    let cfg = run.config("d.toml", &format!("{BLOBS}{}", ATTACK.replace("step_size = 0.5", "step_size = 0.5\nsigma = 1.0")));
    let o = advsec("attack", &cfg, &run.out("b"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("attack.solver.sigma"), "{}", stderr(&o));
}

#[test]
fn missing_attack_block_names_it() {
    let run = Run::new();
    let cfg = run.config("c.toml", BLOBS);
    let o = advsec("attack", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("attack"));
}

#[test]
fn missing_model_file_is_a_config_error() {
    let run = Run::new();
    let text = BLOBS.replace("kind = \"logreg\"\nlambda = 0.1", "path = \"nowhere.json\"");
    let cfg = run.config("c.toml", &text);
    let o = advsec("train", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.path"), "{}", stderr(&o));
}

#[test]
fn zero_budget_attack_reports_no_success() {
    let run = Run::new();
    let cfg = run.config("c.toml", &format!("{BLOBS}{ATTACK}"));
    let o = advsec("attack", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("success: 0/8"), "{}", stdout(&o));
}

#[test]
fn empty_sample_list_succeeds() {
    let run = Run::new();
    let cfg = run.config("c.toml", &format!("{BLOBS}{}", ATTACK.replace("n_attack = 8", "samples = []")));
    let o = advsec("attack", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("success: 0/0"));
}

#[test]
fn targeted_attack_traces_and_plots() {
    let run = Run::new();
    let attack = ATTACK
        .replace("loss = \"cross-entropy\"", "loss = \"cw-logit-diff\"\ntarget = 1\nkappa = 0.2")
        .replace("epsilon = 0.0", "epsilon = 3.0")
        .replace("n_attack = 8", "samples = [0, 1, 2, 3]");
    let cfg = run.config("c.toml", &format!("{BLOBS}{attack}"));
    let out = run.out("a");
    let o = advsec("attack", &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("attack_summary.json")).unwrap()).unwrap();
    let samples = summary["samples"].as_array().unwrap();
    assert!(!samples.is_empty());
    for s in samples {
        let i = s["sample_index"].as_u64().unwrap();
        let trace: Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(format!("traces/sample_{i}.json"))).unwrap())
                .unwrap();
        let losses: Vec<f64> = trace["trace"]["losses"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert!(losses.last().unwrap() <= &losses[0]);
        if trace["success"] == true {
            for kind in ["loss", "scores"] {
                let svg = std::fs::read_to_string(out.join(format!("plots/sample_{i}_{kind}.svg"))).unwrap();
                let doc = roxmltree::Document::parse(&svg).unwrap();
                let series: Vec<_> = doc
                    .descendants()
                    .filter(|n| n.attribute("class") == Some("series"))
                    .collect();
                assert_eq!(series.len(), if kind == "loss" { 1 } else { 2 });
                assert!(series.iter().all(|n| n.attribute("data-label").is_some()));
            }
        }
    }
    assert!(summary["summary"]["n_success"].as_u64().unwrap() > 0);
}

#[test]
fn gradient_solver_on_forest_is_a_runtime_error() {
    let run = Run::new();
    let forest = BLOBS.replace(
        "kind = \"logreg\"\nlambda = 0.1",
        "kind = \"random-forest\"\nn_trees = 5\nmax_depth = 4\nseed = 1",
    );
    let cfg = run.config("train.toml", &forest);
    assert_eq!(advsec("train", &cfg, &run.out("model")).status.code(), Some(0));
    let from_file = BLOBS.replace("kind = \"logreg\"\nlambda = 0.1", "path = \"model/model.json\"");
    let attack = ATTACK.replace("epsilon = 0.0", "epsilon = 1.0");
    let cfg = run.config("attack.toml", &format!("{from_file}{attack}"));
    let o = advsec("attack", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not differentiable"), "{}", stderr(&o));
}

#[test]
fn seceval_zero_grid_is_clean_accuracy() {
    let run = Run::new();
    let attack = ATTACK.replace("n_attack = 8", "eps_grid = [0.0]");
    let cfg = run.config("c.toml", &format!("{BLOBS}{attack}"));
    let out = run.out("a");
    let o = advsec("seceval", &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = advsec("train", &cfg, &run.out("t"));
    assert_eq!(o.status.code(), Some(0));
    let metrics: Value =
        serde_json::from_str(&std::fs::read_to_string(run.out("t").join("metrics.json")).unwrap()).unwrap();
    let csv = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "eps,accuracy,mean_confidence_drop");
    let acc: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(acc, metrics["test_accuracy"].as_f64().unwrap());
    let svg = std::fs::read_to_string(out.join("plots/curve.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
}

#[test]
fn seceval_rejects_bad_grid_and_targets() {
    let run = Run::new();
    let attack = ATTACK.replace("n_attack = 8", "eps_grid = [0.5, 1.0]");
    let cfg = run.config("c.toml", &format!("{BLOBS}{attack}"));
    let o = advsec("seceval", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps_grid"));

    let attack = ATTACK.replace("n_attack = 8", "eps_grid = [0.0]\ntarget = 1");
    let cfg = run.config("d.toml", &format!("{BLOBS}{attack}"));
    assert_eq!(advsec("seceval", &cfg, &run.out("b")).status.code(), Some(2));
}

#[test]
fn poison_without_points_keeps_accuracy() {
    let run = Run::new();
    let poison = "[poison]\nn_poison = 0\npoison_label = 1\n[poison.solver]\nsolver = \"pgd\"\nstep_size = 1.0\n";
    let cfg = run.config("c.toml", &format!("{BLOBS}{poison}"));
    let out = run.out("a");
    let o = advsec("poison", &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["results"]["val_accuracy_before"], m["results"]["val_accuracy_after"]);
    assert!(listed(&m).contains(&"poison_points.csv".to_string()));
}

#[test]
fn poison_rejects_non_convex_victims() {
    let run = Run::new();
    let mlp = BLOBS.replace(
        "kind = \"logreg\"\nlambda = 0.1",
        "kind = \"mlp\"\nlambda = 0.01\nhidden_sizes = [4]\nepochs = 10\nlearning_rate = 0.1\nseed = 0",
    );
    let poison = "[poison]\nn_poison = 2\npoison_label = 1\n[poison.solver]\nsolver = \"pgd\"\nstep_size = 1.0\n";
    let cfg = run.config("c.toml", &format!("{mlp}{poison}"));
    let o = advsec("poison", &cfg, &run.out("a"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("poison"));
}

#[test]
fn linear_integrated_gradients_match_weights() {
    let run = Run::new();
    let cfg = run.config("train.toml", BLOBS);
    assert_eq!(advsec("train", &cfg, &run.out("model")).status.code(), Some(0));
    let explain = "[explain]\nmethod = \"integrated-gradients\"\nsample = 3\ntarget_class = 1\nbaseline = [0.25, -0.5]\n";
    let from_file = BLOBS.replace("kind = \"logreg\"\nlambda = 0.1", "path = \"model/model.json\"");
    let cfg = run.config("explain.toml", &format!("{from_file}{explain}"));
    let out = run.out("e");
    let o = advsec("explain", &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let model = load_pipeline::<f64>(run.out("model").join("model.json")).unwrap();
    let data = make_blobs(120, &[vec![-1.0, 0.0], vec![1.0, 0.0]], 0.6, 4).unwrap();
    let (_, test) = train_test_split(&data, 0.3, 4).unwrap();
    let (x, _) = test.sample(3);
    let w = model.input_gradient(&x, 1).unwrap();
    let b = [0.25, -0.5];
    let csv = std::fs::read_to_string(out.join("attribution.csv")).unwrap();
    let scores: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 2);
    for j in 0..2 {
        assert!((scores[j] - w[j] * (x[j] - b[j])).abs() <= 1e-9);
    }
    let svg = std::fs::read_to_string(out.join("plots/attribution.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("rect")).count(), 3);
}

#[test]
fn influence_explanation_ranks_training_points() {
    let run = Run::new();
    let explain = "[explain]\nmethod = \"influence\"\nsample = 0\n";
    let cfg = run.config("c.toml", &format!("{BLOBS}{explain}"));
    let out = run.out("a");
    let o = advsec("explain", &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("influence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 84);
    assert!(csv.starts_with("train_index,influence\n"));
}

#[test]
fn seed_flag_overrides_config_seeds() {
    let run = Run::new();
    let cfg = run.config("c.toml", BLOBS);
    let go = |out: &str, seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_advsec"))
            .args(["train", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(run.out(out))
            .args(["--seed", seed])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        manifest(&run.out(out))
    };
    let a = go("a", "9");
    assert_eq!(a["seeds"]["dataset"], 9);
    assert_ne!(a["files"], go("b", "10")["files"]);
}
