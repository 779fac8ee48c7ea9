use advsec_core::models::{fit, ModelSpec};
use advsec_core::tensor::{make_blobs, make_moons};
use advsec_core::Classifier;

#[test]
fn far_blobs_are_linearly_separable() {
    let ds = make_blobs(10, &[vec![-10.0, 0.0], vec![10.0, 0.0]], 0.1, 1).unwrap();
    for kind in [ModelSpec::Logreg { lambda: 0.01 }, ModelSpec::SvmLinear { lambda: 0.01 }] {
        assert_eq!(fit(&kind, &ds).unwrap().accuracy_on(&ds).unwrap(), 1.0);
    }
}

#[test]
fn moons_need_a_nonlinear_model() {
    let ds = make_moons(200, 0.1, 0).unwrap();
    let rbf = fit(&ModelSpec::SvmRbf { lambda: 0.01, gamma: 2.0 }, &ds).unwrap();
    let linear = fit(&ModelSpec::Logreg { lambda: 0.01 }, &ds).unwrap();
    let (a_rbf, a_lin) = (rbf.accuracy_on(&ds).unwrap(), linear.accuracy_on(&ds).unwrap());
    assert!(a_rbf > 0.95, "rbf {a_rbf}");
    assert!(a_lin < a_rbf && a_lin < 0.95, "linear {a_lin}");
}

#[test]
fn well_separated_blobs_give_perfect_training_accuracy() {
    let ds = make_blobs(100, &[vec![-3.0, -3.0], vec![3.0, 3.0]], 0.5, 9).unwrap();
    assert_eq!(fit(&ModelSpec::Logreg { lambda: 0.1 }, &ds).unwrap().accuracy_on(&ds).unwrap(), 1.0);
}
