use advsec_core::attacks::{poison_gradient, poisoned_validation_loss, run_evasion, security_evaluation};
use advsec_core::models::{fit, LossSpec, ModelSpec};
use advsec_core::optim::SolverConfig;
use advsec_core::tensor::{make_blobs, make_moons, Norm};
use advsec_core::{Classifier, Dataset, EvasionSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Uniform samples from the l2 disc of radius `eps` around `x`.
fn disc_samples(x: &[f64], eps: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = eps * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            vec![x[0] + r * a.cos(), x[1] + r * a.sin()]
        })
        .collect()
}

#[test]
fn rbf_attack_succeeds_at_the_smallest_brute_force_budget() {
    let train = make_moons(200, 0.1, 0).unwrap();
    let test = make_moons(40, 0.1, 1).unwrap();
    let m = fit(&ModelSpec::SvmRbf { lambda: 0.05, gamma: 1.0 }, &train).unwrap();
    let cfg = SolverConfig::pgd(0.05).with_max_iter(200);
    let grid: Vec<f64> = (1..=20).map(|k| 0.025 * k as f64).collect();
    let (mut cases, mut misses) = (0, Vec::new());
    for i in 0..test.n_samples() {
        let (x, y) = test.sample(i);
        if m.predict(&x).unwrap() != y {
            continue;
        }
        let t = 1 - y;
        let Some(&eps) = grid.iter().find(|&&eps| {
            disc_samples(&x, eps, 10_000, i as u64)
                .iter()
                .any(|p| m.predict(p).unwrap() == t)
        }) else {
            continue;
        };
        cases += 1;
        let spec = EvasionSpec::new(LossSpec::cw(t, 0.0), Norm::L2, eps);
        let r = run_evasion(&m, &x, y, &spec, &cfg).unwrap();
        let moved: Vec<f64> = r.x_adv.iter().zip(&x).map(|(a, b)| a - b).collect();
        assert!(norm(&moved) <= eps + 1e-9);
        if !r.success {
            misses.push((i, eps));
        }
    }
    assert!(cases >= 20, "only {cases} evadable points");
    assert!(misses.is_empty(), "brute force evades but the attack does not: {misses:?}");
}

fn fd_gradient(victim: &ModelSpec<f64>, train: &Dataset, val: &Dataset, xc: &[f64], yc: usize) -> Vec<f64> {
    let h = 1e-4;
    (0..xc.len())
        .map(|j| {
            let (mut a, mut b) = (xc.to_vec(), xc.to_vec());
            a[j] += h;
            b[j] -= h;
            let fa = poisoned_validation_loss(victim, train, val, &a, yc).unwrap();
            let fb = poisoned_validation_loss(victim, train, val, &b, yc).unwrap();
            (fa - fb) / (2.0 * h)
        })
        .collect()
}

fn relative_error(g: &[f64], fd: &[f64]) -> f64 {
    let d: Vec<f64> = g.iter().zip(fd).map(|(a, b)| a - b).collect();
    norm(&d) / norm(fd).max(1e-12)
}

#[test]
fn hypergradient_at_a_duplicated_training_point() {
    let centers = [vec![-1.0, 0.0], vec![1.0, 0.0]];
    let train = make_blobs(30, &centers, 0.7, 3).unwrap();
    let val = make_blobs(40, &centers, 0.7, 4).unwrap();
    let victim = ModelSpec::Logreg { lambda: 0.1 };
    for i in [0, 7, 12] {
        let (xc, yc) = train.sample(i);
        let g = poison_gradient(&victim, &train, &val, &xc, yc).unwrap();
        let fd = fd_gradient(&victim, &train, &val, &xc, yc);
        assert!(relative_error(&g, &fd) <= 1e-2, "point {i}: {g:?} vs {fd:?}");
    }
}

#[test]
fn rbf_hypergradient_matches_retraining() {
    let centers = [vec![-1.0, 0.0], vec![1.0, 0.0]];
    let train = make_blobs(30, &centers, 0.7, 5).unwrap();
    let val = make_blobs(40, &centers, 0.7, 6).unwrap();
    let victim = ModelSpec::SvmRbf { lambda: 0.1, gamma: 0.5 };
    for (xc, yc) in [(vec![-0.5, 0.2], 1), (vec![0.4, -0.3], 0)] {
        let g = poison_gradient(&victim, &train, &val, &xc, yc).unwrap();
        let fd = fd_gradient(&victim, &train, &val, &xc, yc);
        assert!(relative_error(&g, &fd) <= 1e-2, "{g:?} vs {fd:?}");
    }
}

#[test]
fn white_box_curve_is_at_least_as_strong_as_black_box() {
    let train = make_moons(200, 0.15, 7).unwrap();
    let test = make_moons(40, 0.15, 8).unwrap();
    let grid = [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8];
    let spec = EvasionSpec::new(LossSpec::cross_entropy(), Norm::L2, 0.0);
    for kind in [
        ModelSpec::Logreg { lambda: 0.1 },
        ModelSpec::SvmRbf { lambda: 0.05, gamma: 2.0 },
        ModelSpec::Mlp {
            lambda: 1e-3,
            hidden_sizes: vec![16],
            epochs: 400,
            learning_rate: 0.5,
            seed: 2,
        },
    ] {
        let m = fit(&kind, &train).unwrap();
        let white = security_evaluation(&m, &test, &spec, &grid, &SolverConfig::pgd(0.1).with_max_iter(50), 2).unwrap();
        let black = security_evaluation(
            &m,
            &test,
            &spec,
            &grid,
            &SolverConfig::random_search(0.1, 8, 1).with_max_iter(50),
            2,
        )
        .unwrap();
        for (w, b) in white.accuracy_at_eps.iter().zip(&black.accuracy_at_eps) {
            assert!(w <= &(b + 0.05), "{}: white {w} vs black {b}", kind.name());
        }
    }
}
