//! Contract checks of the experiment suites at moderate sizes (the
//! full-size runs are CLI territory; the acceptance suite covers the
//! headline statistics).

use sqmap_core::electric::SolveMode;
use sqmap_core::pipeline::{
    experiment_degree_tail, experiment_fourcorner, experiment_width,
};

#[test]
fn width_symmetry_and_positivity() {
    let r = experiment_width(60, 400, 21);
    assert_eq!(r.lambdas.len(), 400);
    assert!(r.lambdas.iter().all(|&l| l > 0.0));
    assert!(r.min_lambda > 0.0 && r.median_lambda > 0.0);
    // the conditioned law is self-dual, so log-width vs its negation must
    // look like one distribution
    assert!(r.p_value > 1e-3, "ks p-value {:.5}", r.p_value);
}

#[test]
fn degree_tail_shape() {
    let r = experiment_degree_tail(60, 400, 22);
    assert!(r.min_degree >= 3, "3-connected maps have min degree 3");
    assert!(r.slope < 0.0, "log-frequency slope must be negative");
    assert_eq!(r.histogram.iter().sum::<u64>(), 400);
}

#[test]
fn four_corner_modes_and_persistence() {
    let r = experiment_fourcorner(&[20, 80], 80, 23);
    assert_eq!(r.per_n.len(), 2);
    assert!(matches!(r.per_n[0].mode, SolveMode::Rational));
    // per-sample counts are persisted alongside the summary statistics
    assert_eq!(r.per_n[0].counts.len() as u64, r.per_n[0].used);
    for at in &r.per_n {
        assert!(at.frequency_at_least_one >= 0.0 && at.frequency_at_least_one <= 1.0);
    }
}
