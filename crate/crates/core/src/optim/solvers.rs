use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::problem::{Problem, SolverConfig, SolverMethod, SolverTrace, StopReason};
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::scalar::Scalar;

const MAX_HALVINGS: usize = 10;
const STOP_WINDOW: usize = 5;

/// Evaluation bookkeeping shared by all solvers.
struct Run<'p, 'a, T> {
    problem: &'p Problem<'a, T>,
    cfg: &'p SolverConfig<T>,
    points: Vec<Vec<T>>,
    losses: Vec<T>,
    best: Vec<T>,
    n_fun: usize,
    n_grad: usize,
}

impl<'p, 'a, T: Scalar> Run<'p, 'a, T> {
    fn start(
        problem: &'p Problem<'a, T>,
        cfg: &'p SolverConfig<T>,
        x0: &[T],
    ) -> Result<(Self, Vec<T>, T)> {
        cfg.validate()?;
        problem.constraint().validate()?;
        if cfg.method.needs_gradient() && !problem.has_gradient() {
            return Err(Error::InvalidSpec(format!(
                "solver {} requires a gradient",
                cfg.method.name()
            )));
        }
        let x = problem.constraint().project(x0)?;
        let mut run = Self {
            problem,
            cfg,
            points: Vec::new(),
            losses: Vec::new(),
            best: Vec::new(),
            n_fun: 0,
            n_grad: 0,
        };
        let fx = run.f(&x)?;
        run.accept(&x, fx);
        Ok((run, x, fx))
    }

    fn f(&mut self, x: &[T]) -> Result<T> {
        self.n_fun += 1;
        let v = self.problem.objective(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical {
                iterate: x.iter().map(|v| v.as_f64()).collect(),
            })
        }
    }

    fn grad(&mut self, x: &[T]) -> Result<Vec<T>> {
        self.n_grad += 1;
        let g = self.problem.gradient(x)?;
        if g.len() != x.len() {
            return Err(Error::Shape(
                "gradient length differs from the iterate".into(),
            ));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                iterate: x.iter().map(|v| v.as_f64()).collect(),
            });
        }
        Ok(g)
    }

    fn project(&self, x: &[T]) -> Result<Vec<T>> {
        self.problem.constraint().project(x)
    }

    fn accept(&mut self, x: &[T], fx: T) {
        self.points.push(x.to_vec());
        self.losses.push(fx);
        self.best.push(fx);
    }

    /// Records the best objective after an iteration that kept the iterate.
    fn keep(&mut self) {
        let last = *self.best.last().expect("started");
        self.best.push(last);
    }

    fn budget_spent(&self) -> bool {
        self.cfg.max_fun_evals.is_some_and(|b| self.n_fun >= b)
    }

    /// Improvement of the best objective over the last window of iterations.
    fn should_stop(&self, stagnation_stops: bool) -> bool {
        let k = self.best.len();
        if k <= STOP_WINDOW {
            return false;
        }
        let gain = self.best[k - 1 - STOP_WINDOW] - self.best[k - 1];
        gain < self.cfg.stop_tol || (stagnation_stops && gain <= T::zero())
    }

    fn finish(self, reason: StopReason) -> (Vec<T>, SolverTrace<T>) {
        let x = self.points.last().expect("started").clone();
        (
            x,
            SolverTrace {
                points: self.points,
                losses: self.losses,
                n_fun_evals: self.n_fun,
                n_grad_evals: self.n_grad,
                stop_reason: reason,
            },
        )
    }
}

/// Runs the solver selected by `cfg` on `problem` from `x0`.
pub fn solve<T: Scalar>(
    problem: &Problem<'_, T>,
    x0: &[T],
    cfg: &SolverConfig<T>,
) -> Result<(Vec<T>, SolverTrace<T>)> {
    match cfg.method {
        SolverMethod::Pgd { .. } => solve_pgd(problem, x0, cfg),
        SolverMethod::PgdLs { .. } => solve_pgd_ls(problem, x0, cfg),
        SolverMethod::RandomSearch { .. } => solve_random_search(problem, x0, cfg),
    }
}

fn wrong_solver(expected: &str, cfg_name: &str) -> Error {
    Error::InvalidSpec(format!("expected a {expected} config, got {cfg_name}"))
}

/// Projected gradient descent with per-step halving on non-improving steps.
pub fn solve_pgd<T: Scalar>(
    problem: &Problem<'_, T>,
    x0: &[T],
    cfg: &SolverConfig<T>,
) -> Result<(Vec<T>, SolverTrace<T>)> {
    let SolverMethod::Pgd { step_size } = cfg.method else {
        return Err(wrong_solver("pgd", cfg.method.name()));
    };
    let (mut run, mut x, mut fx) = Run::start(problem, cfg, x0)?;
    let mut grad: Option<Vec<T>> = None;
    for _ in 0..cfg.max_iter {
        if run.budget_spent() {
            return Ok(run.finish(StopReason::BudgetExhausted));
        }
        let g = match grad.take() {
            Some(g) => g,
            None => run.grad(&x)?,
        };
        let mut eta = step_size;
        let mut moved = None;
        for _ in 0..=MAX_HALVINGS {
            let step: Vec<T> = x.iter().zip(&g).map(|(&xi, &gi)| xi - eta * gi).collect();
            let cand = run.project(&step)?;
            // a fixed point of the projected step is one for every step length
            if cand == x {
                break;
            }
            let fc = run.f(&cand)?;
            if fc <= fx {
                moved = Some((cand, fc));
                break;
            }
            eta *= T::lit(0.5);
        }
        match moved {
            Some((cand, fc)) => {
                x = cand;
                fx = fc;
                run.accept(&x, fx);
            }
            None => {
                grad = Some(g);
                run.keep();
            }
        }
        if run.should_stop(true) {
            return Ok(run.finish(StopReason::TolReached));
        }
    }
    Ok(run.finish(StopReason::MaxIter))
}

/// Projected gradient descent with a doubling-then-bisection line search
/// along the normalized negative gradient.
pub fn solve_pgd_ls<T: Scalar>(
    problem: &Problem<'_, T>,
    x0: &[T],
    cfg: &SolverConfig<T>,
) -> Result<(Vec<T>, SolverTrace<T>)> {
    let SolverMethod::PgdLs {
        ls_max_evals,
        ls_min_step,
    } = cfg.method
    else {
        return Err(wrong_solver("pgd-ls", cfg.method.name()));
    };
    let (mut run, mut x, mut fx) = Run::start(problem, cfg, x0)?;
    let mut grad: Option<Vec<T>> = None;
    for _ in 0..cfg.max_iter {
        if run.budget_spent() {
            return Ok(run.finish(StopReason::BudgetExhausted));
        }
        let g = match grad.take() {
            Some(g) => g,
            None => run.grad(&x)?,
        };
        let gn = norm2(&g);
        let found = if gn > T::zero() {
            let dir: Vec<T> = g.iter().map(|&v| -v / gn).collect();
            line_search(&mut run, &x, fx, &dir, ls_min_step, ls_max_evals)?
        } else {
            None
        };
        match found {
            Some((cand, fc)) => {
                x = cand;
                fx = fc;
                run.accept(&x, fx);
            }
            None => {
                grad = Some(g);
                run.keep();
            }
        }
        if run.should_stop(true) {
            return Ok(run.finish(StopReason::TolReached));
        }
    }
    Ok(run.finish(StopReason::MaxIter))
}

fn line_search<T: Scalar>(
    run: &mut Run<'_, '_, T>,
    x: &[T],
    fx: T,
    dir: &[T],
    min_step: T,
    max_evals: usize,
) -> Result<Option<(Vec<T>, T)>> {
    let mut evals = 0;
    let probe = |run: &mut Run<'_, '_, T>, t: T| -> Result<(Vec<T>, T)> {
        let raw: Vec<T> = x.iter().zip(dir).map(|(&xi, &di)| xi + t * di).collect();
        let p = run.project(&raw)?;
        let fp = run.f(&p)?;
        Ok((p, fp))
    };
    let mut best: Option<(Vec<T>, T)> = None;
    let mut lo = T::zero();
    let mut hi = None;
    let mut t = min_step;
    while evals < max_evals {
        evals += 1;
        let (p, fp) = probe(run, t)?;
        let improving = fp < best.as_ref().map_or(fx, |b| b.1);
        if !improving {
            hi = Some(t);
            break;
        }
        best = Some((p, fp));
        lo = t;
        t = t + t;
    }
    if let Some(mut hi) = hi {
        let width_tol = min_step * T::lit(1e-6);
        while evals < max_evals && hi - lo > width_tol {
            evals += 1;
            let mid = (lo + hi) * T::lit(0.5);
            let (p, fp) = probe(run, mid)?;
            if fp < best.as_ref().map_or(fx, |b| b.1) {
                best = Some((p, fp));
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(best.filter(|(p, _)| p.as_slice() != x))
}

/// Seeded (1+1) Gaussian search with multiplicative step adaptation.
pub fn solve_random_search<T: Scalar>(
    problem: &Problem<'_, T>,
    x0: &[T],
    cfg: &SolverConfig<T>,
) -> Result<(Vec<T>, SolverTrace<T>)> {
    let SolverMethod::RandomSearch {
        sigma,
        trials,
        seed,
    } = cfg.method
    else {
        return Err(wrong_solver("random-search", cfg.method.name()));
    };
    let (mut run, mut x, mut fx) = Run::start(problem, cfg, x0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma = sigma;
    for _ in 0..cfg.max_iter {
        if run.budget_spent() {
            return Ok(run.finish(StopReason::BudgetExhausted));
        }
        let mut best: Option<(Vec<T>, T)> = None;
        for _ in 0..trials {
            let raw: Vec<T> = x
                .iter()
                .map(|&xi| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    xi + sigma * T::lit(z)
                })
                .collect();
            let cand = run.project(&raw)?;
            let fc = run.f(&cand)?;
            if fc < best.as_ref().map_or(fx, |b| b.1) {
                best = Some((cand, fc));
            }
        }
        match best {
            Some((cand, fc)) => {
                x = cand;
                fx = fc;
                run.accept(&x, fx);
                sigma *= T::lit(1.2);
            }
            None => {
                run.keep();
                sigma *= T::lit(0.8);
            }
        }
        if run.should_stop(false) {
            return Ok(run.finish(StopReason::TolReached));
        }
    }
    Ok(run.finish(StopReason::MaxIter))
}
