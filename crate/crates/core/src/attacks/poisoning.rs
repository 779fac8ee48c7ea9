use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::seceval::derive_seed;
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};
use crate::models::{
    class_targets, fit, gram, rbf, rbf_grad, solve_binary, Classifier, LinearLoss, LinearObjective,
    ModelSpec, TrainingSet,
};
use crate::optim::{solve, Constraint, Problem, SolverConfig, SolverTrace};
use crate::scalar::Scalar;
use crate::tensor::{Dataset, Tensor};

const RETRAIN_MAX_ITER: usize = 100;
/// Largest poisoned fraction of the training set.
const MAX_POISON_FRACTION: f64 = 0.2;

fn retrain_tolerance<T: Scalar>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(1e4))
}

/// Training-time attack configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct PoisoningSpec<T> {
    pub victim: ModelSpec<T>,
    pub n_poison: usize,
    pub poison_label: usize,
    /// Per-feature `(lo, hi)` bounds for the poison points.
    pub feature_box: Vec<(T, T)>,
    pub solver: SolverConfig<T>,
    /// Seed for picking the training points the poison starts from.
    #[serde(default)]
    pub seed: u64,
}

impl<T: Scalar> PoisoningSpec<T> {
    pub fn validate(&self, train: &Dataset<T>) -> Result<()> {
        self.victim.validate()?;
        if !self.victim.is_convex() {
            return Err(Error::InvalidSpec(format!(
                "poisoning needs a convex smooth victim, got {}",
                self.victim.name()
            )));
        }
        if self.poison_label >= train.n_classes() {
            return Err(Error::InvalidSpec(format!(
                "poison_label {} out of range",
                self.poison_label
            )));
        }
        if self.feature_box.len() != train.n_features() {
            return Err(Error::InvalidSpec(format!(
                "feature_box has {} entries for {} features",
                self.feature_box.len(),
                train.n_features()
            )));
        }
        if self.feature_box.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidSpec("feature_box needs lo <= hi".into()));
        }
        let cap = (MAX_POISON_FRACTION * train.n_samples() as f64).floor() as usize;
        if self.n_poison > cap {
            return Err(Error::InvalidSpec(format!(
                "n_poison {} exceeds 20% of the training set ({cap})",
                self.n_poison
            )));
        }
        self.solver.validate()
    }

    fn constraint(&self) -> Constraint<T> {
        Constraint::bounds(
            self.feature_box.iter().map(|b| b.0).collect(),
            self.feature_box.iter().map(|b| b.1).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoisoningResult<T> {
    pub poison_points: Vec<Vec<T>>,
    pub poison_labels: Vec<usize>,
    pub traces: Vec<SolverTrace<T>>,
    pub val_accuracy_before: f64,
    pub val_accuracy_after: f64,
}

impl<T: Scalar> PoisoningResult<T> {
    pub fn poison_dataset(&self, n_classes: usize) -> Result<Dataset<T>> {
        let d = self.poison_points.first().map_or(0, Vec::len);
        let x = Tensor::matrix(self.poison_points.len(), d, self.poison_points.concat())?;
        Dataset::new(x, self.poison_labels.clone(), n_classes)
    }
}

enum Learner<T> {
    Linear(LinearObjective<T>),
    Rbf { lambda: T, gamma: T },
}

/// A convex victim retrained on `train ∪ {(xc, yc)}`.
struct Victim<T> {
    learner: Learner<T>,
    n_classes: usize,
}

/// Fitted state used by the value and gradient formulas.
enum Fitted<T> {
    Linear(Vec<T>),
    /// Per class: full coefficient vector and active set over the augmented rows.
    Rbf(Vec<(Vec<T>, Vec<bool>)>),
}

impl<T: Scalar> Victim<T> {
    fn new(spec: &ModelSpec<T>, n_classes: usize, n_features: usize) -> Result<Self> {
        let learner = match *spec {
            ModelSpec::Logreg { lambda } | ModelSpec::SvmLinear { lambda } => {
                Learner::Linear(LinearObjective {
                    loss: if matches!(spec, ModelSpec::Logreg { .. }) {
                        LinearLoss::Logistic
                    } else {
                        LinearLoss::SquaredHinge
                    },
                    n_classes,
                    n_features,
                    lambda,
                })
            }
            ModelSpec::SvmRbf { lambda, gamma } => Learner::Rbf { lambda, gamma },
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "poisoning needs a convex smooth victim, got {}",
                    spec.name()
                )))
            }
        };
        Ok(Self { learner, n_classes })
    }

    fn fit(&self, rows: &[Vec<T>], labels: &[usize], warm: Option<&[T]>) -> Result<Fitted<T>> {
        match &self.learner {
            Learner::Linear(obj) => {
                let set = TrainingSet::uniform(rows.to_vec(), labels.to_vec());
                let theta0 = warm.map_or_else(|| vec![T::zero(); obj.n_params()], <[T]>::to_vec);
                Ok(Fitted::Linear(obj.minimize(
                    theta0,
                    &set,
                    retrain_tolerance(),
                    RETRAIN_MAX_ITER,
                )?))
            }
            Learner::Rbf { lambda, gamma } => {
                let kp = gram(*gamma, rows);
                (0..self.n_classes)
                    .map(|k| {
                        let s = solve_binary(
                            &kp,
                            &class_targets(labels, k),
                            *lambda,
                            RETRAIN_MAX_ITER,
                        )?;
                        Ok((s.alpha, s.active))
                    })
                    .collect::<Result<_>>()
                    .map(Fitted::Rbf)
            }
        }
    }

    fn scores(&self, fitted: &Fitted<T>, rows: &[Vec<T>], x: &[T]) -> Vec<T> {
        match (&self.learner, fitted) {
            (Learner::Linear(obj), Fitted::Linear(theta)) => obj.scores(theta, x),
            (Learner::Rbf { gamma, .. }, Fitted::Rbf(classes)) => {
                let kx: Vec<T> = rows.iter().map(|r| rbf(*gamma, x, r) + T::one()).collect();
                classes
                    .iter()
                    .map(|(a, _)| crate::linalg::dot(a, &kx))
                    .collect()
            }
            _ => unreachable!("fitted state matches the learner"),
        }
    }

    /// Mean per-sample victim loss on `val`.
    fn val_loss(&self, fitted: &Fitted<T>, rows: &[Vec<T>], val: &Dataset<T>) -> T {
        let total: T = (0..val.n_samples())
            .map(|i| {
                let (x, y) = val.sample(i);
                match (&self.learner, fitted) {
                    (Learner::Linear(obj), Fitted::Linear(theta)) => obj.sample_loss(theta, &x, y),
                    _ => squared_hinge(&self.scores(fitted, rows, &x), y),
                }
            })
            .sum();
        total / T::from_usize_lossy(val.n_samples())
    }

    fn hypergradient(
        &self,
        fitted: &Fitted<T>,
        rows: &[Vec<T>],
        labels: &[usize],
        val: &Dataset<T>,
    ) -> Result<Vec<T>> {
        let c = rows.len() - 1;
        let xc = &rows[c];
        let m = T::from_usize_lossy(val.n_samples());
        match (&self.learner, fitted) {
            (Learner::Linear(obj), Fitted::Linear(theta)) => {
                let mut outer = vec![T::zero(); obj.n_params()];
                for i in 0..val.n_samples() {
                    let (x, y) = val.sample(i);
                    for (o, g) in outer.iter_mut().zip(obj.sample_grad(theta, &x, y)) {
                        *o += g / m;
                    }
                }
                let set = TrainingSet::uniform(rows.to_vec(), labels.to_vec());
                let v = solve_spd(&obj.hessian(theta, &set), &outer)?;
                let mixed = obj.sample_mixed(theta, xc, labels[c]);
                Ok(mixed.t_matvec(&v).into_iter().map(|g| -g).collect())
            }
            (Learner::Rbf { lambda, gamma }, Fitted::Rbf(classes)) => {
                let d = xc.len();
                let mut grad = vec![T::zero(); d];
                let val_rows = val.rows();
                let val_scores: Vec<Vec<T>> = val_rows
                    .iter()
                    .map(|x| self.scores(fitted, rows, x))
                    .collect();
                for (k, (alpha, active)) in classes.iter().enumerate() {
                    if !active[c] {
                        continue;
                    }
                    // u_v = ∂L_val/∂f_k(x_v)
                    let u: Vec<T> = val_scores
                        .iter()
                        .zip(val.y())
                        .map(|(z, &y)| {
                            let t = if y == k { T::one() } else { -T::one() };
                            -T::lit(2.0) * t * (T::one() - t * z[k]).max(T::zero()) / m
                        })
                        .collect();
                    let idx: Vec<usize> = (0..rows.len()).filter(|&i| active[i]).collect();
                    let mut sys = Matrix::zeros(idx.len(), idx.len());
                    for (a, &i) in idx.iter().enumerate() {
                        for (b, &j) in idx.iter().enumerate() {
                            sys[(a, b)] =
                                T::lit(2.0) * (rbf(*gamma, &rows[i], &rows[j]) + T::one());
                        }
                        sys[(a, a)] += *lambda;
                    }
                    let rhs: Vec<T> = idx
                        .iter()
                        .map(|&j| {
                            val_rows
                                .iter()
                                .zip(&u)
                                .map(|(xv, &uv)| uv * (rbf(*gamma, xv, &rows[j]) + T::one()))
                                .sum()
                        })
                        .collect();
                    let w = solve_spd(&sys, &rhs)?;
                    // (λI + 2K'_AA) dα_A = −2 R, with R the xc-derivative of K'_AA α_A
                    for (&i, &wi) in idx.iter().zip(&w) {
                        let r = if i == c {
                            let mut acc = vec![T::zero(); d];
                            for &j in idx.iter().filter(|&&j| j != c) {
                                for (o, g) in acc.iter_mut().zip(rbf_grad(*gamma, xc, &rows[j])) {
                                    *o += alpha[j] * g;
                                }
                            }
                            acc
                        } else {
                            rbf_grad(*gamma, xc, &rows[i])
                                .into_iter()
                                .map(|g| alpha[c] * g)
                                .collect()
                        };
                        for (o, rv) in grad.iter_mut().zip(r) {
                            *o -= T::lit(2.0) * wi * rv;
                        }
                    }
                    // xc also enters every validation score directly
                    for (xv, &uv) in val_rows.iter().zip(&u) {
                        for (o, g) in grad.iter_mut().zip(rbf_grad(*gamma, xc, xv)) {
                            *o += alpha[c] * uv * g;
                        }
                    }
                }
                Ok(grad)
            }
            _ => unreachable!("fitted state matches the learner"),
        }
    }
}

fn squared_hinge<T: Scalar>(z: &[T], y: usize) -> T {
    z.iter()
        .enumerate()
        .map(|(k, &zk)| {
            let t = if k == y { T::one() } else { -T::one() };
            let r = (T::one() - t * zk).max(T::zero());
            r * r
        })
        .sum()
}

fn augmented<T: Scalar>(
    train: &Dataset<T>,
    xc: &[T],
    yc: usize,
) -> Result<(Vec<Vec<T>>, Vec<usize>)> {
    if xc.len() != train.n_features() {
        return Err(Error::Shape(format!(
            "poison point has {} features, training data {}",
            xc.len(),
            train.n_features()
        )));
    }
    if yc >= train.n_classes() {
        return Err(Error::InvalidArgument(format!(
            "poison label {yc} out of range"
        )));
    }
    let mut rows = train.rows();
    rows.push(xc.to_vec());
    let mut labels = train.y().to_vec();
    labels.push(yc);
    Ok((rows, labels))
}

/// Mean validation loss of the victim retrained with `(xc, yc)` added.
pub fn poisoned_validation_loss<T: Scalar>(
    victim: &ModelSpec<T>,
    train: &Dataset<T>,
    val: &Dataset<T>,
    xc: &[T],
    yc: usize,
) -> Result<T> {
    let v = Victim::new(victim, train.n_classes(), train.n_features())?;
    let (rows, labels) = augmented(train, xc, yc)?;
    let fitted = v.fit(&rows, &labels, None)?;
    Ok(v.val_loss(&fitted, &rows, val))
}

/// Gradient of the validation loss with respect to the poison point `xc`,
/// through the retrained victim (implicit differentiation of its optimality
/// conditions).
pub fn poison_gradient<T: Scalar>(
    victim: &ModelSpec<T>,
    train: &Dataset<T>,
    val: &Dataset<T>,
    xc: &[T],
    yc: usize,
) -> Result<Vec<T>> {
    let v = Victim::new(victim, train.n_classes(), train.n_features())?;
    let (rows, labels) = augmented(train, xc, yc)?;
    let fitted = v.fit(&rows, &labels, None)?;
    v.hypergradient(&fitted, &rows, &labels, val)
}

/// Greedy poisoning: each point starts as a relabeled copy of a random
/// training point and is moved to maximize the validation loss of the
/// retrained victim.
pub fn run_poisoning<T: Scalar>(
    spec: &PoisoningSpec<T>,
    train: &Dataset<T>,
    val: &Dataset<T>,
) -> Result<PoisoningResult<T>> {
    spec.validate(train)?;
    if val.n_features() != train.n_features() {
        return Err(Error::Shape(
            "validation and training features differ".into(),
        ));
    }
    let before = fit(&spec.victim, train)?.accuracy_on(val)?;
    let victim = Victim::new(&spec.victim, train.n_classes(), train.n_features())?;
    let sources: Vec<usize> = (0..train.n_samples())
        .filter(|&i| train.y()[i] != spec.poison_label)
        .collect();
    if spec.n_poison > 0 && sources.is_empty() {
        return Err(Error::DegenerateData(
            "no training point outside the poison class".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let constraint = spec.constraint();
    let yc = spec.poison_label;
    let mut current = train.clone();
    let mut points = Vec::with_capacity(spec.n_poison);
    let mut traces = Vec::with_capacity(spec.n_poison);
    for p in 0..spec.n_poison {
        let start = train.sample(sources[rng.gen_range(0..sources.len())]).0;
        let warm = match victim.fit(&current.rows(), current.y(), None)? {
            Fitted::Linear(theta) => Some(theta),
            Fitted::Rbf(_) => None,
        };
        let cfg = spec
            .solver
            .clone()
            .with_seed(derive_seed(spec.seed, &[p as u64]));
        let base = &current;
        let (victim, warm) = (&victim, warm.as_deref());
        let (x, trace) = {
            let problem = Problem::new(
                move |xc: &[T]| {
                    let (rows, labels) = augmented(base, xc, yc)?;
                    let fitted = victim.fit(&rows, &labels, warm)?;
                    Ok(-victim.val_loss(&fitted, &rows, val))
                },
                constraint.clone(),
            )
            .with_gradient(move |xc: &[T]| {
                let (rows, labels) = augmented(base, xc, yc)?;
                let fitted = victim.fit(&rows, &labels, warm)?;
                Ok(victim
                    .hypergradient(&fitted, &rows, &labels, val)?
                    .into_iter()
                    .map(|g| -g)
                    .collect())
            });
            solve(&problem, &start, &cfg)?
        };
        current = current.extended(std::slice::from_ref(&x), &[yc])?;
        points.push(x);
        traces.push(trace);
    }
    let after = if spec.n_poison == 0 {
        before
    } else {
        fit(&spec.victim, &current)?.accuracy_on(val)?
    };
    Ok(PoisoningResult {
        poison_labels: vec![yc; points.len()],
        poison_points: points,
        traces,
        val_accuracy_before: before,
        val_accuracy_after: after,
    })
}

/// Lowest validation accuracy over `trials` insertions of `n_poison` random
/// training copies, each relabeled to a random other class.
pub fn random_flip_baseline<T: Scalar>(
    victim: &ModelSpec<T>,
    train: &Dataset<T>,
    val: &Dataset<T>,
    n_poison: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let k = train.n_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = fit(victim, train)?.accuracy_on(val)?;
    let all: Vec<usize> = (0..train.n_samples()).collect();
    for _ in 0..trials {
        let picks: Vec<usize> = all.choose_multiple(&mut rng, n_poison).copied().collect();
        let rows: Vec<Vec<T>> = picks.iter().map(|&i| train.sample(i).0).collect();
        let labels: Vec<usize> = picks
            .iter()
            .map(|&i| {
                let y = train.y()[i];
                (y + rng.gen_range(1..k)) % k
            })
            .collect();
        let acc = fit(victim, &train.extended(&rows, &labels)?)?.accuracy_on(val)?;
        worst = worst.min(acc);
    }
    Ok(worst)
}
