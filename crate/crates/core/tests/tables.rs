//! Rejection rates of the reference models at 200 repetitions.

use ngdim::dimtest::Method;
use ngdim::simulate::rng::Stream;
use ngdim::{
    estimate_q, run_experiment, BootstrapConfig, EstimateRule, ExperimentConfig, ModelSpec,
    Sigma1Mode, TestConfig,
};

fn rate(model: ModelSpec, n: usize, k: usize, method: Method, seed: u64) -> f64 {
    let cfg = ExperimentConfig {
        n,
        reps: 200,
        ks: vec![k],
        methods: vec![method],
        alpha: 0.05,
        sigma1_mode: Sigma1Mode::Ngca,
        bootstrap: BootstrapConfig::default(),
        seed,
    };
    let report = run_experiment(&model, &cfg).unwrap();
    assert_eq!(report.failures, 0);
    report.rate(k, method).unwrap()
}

fn within(observed: f64, expected: f64) -> bool {
    let tol = 3.0 * (expected * (1.0 - expected) / 200.0).sqrt() + 0.02;
    (observed - expected).abs() <= tol
}

#[test]
fn m3_size_at_large_n() {
    let r = rate(ModelSpec::m3(), 10_000, 3, Method::AsymptoticCombined, 31);
    assert!(within(r, 0.043), "rate {r}");
}

#[test]
fn m3_power_at_moderate_n() {
    let r = rate(ModelSpec::m3(), 2000, 2, Method::AsymptoticCombined, 32);
    assert!(within(r, 1.0), "rate {r}");
}

#[test]
fn m1_size_at_large_n() {
    let r = rate(ModelSpec::m1(), 10_000, 2, Method::AsymptoticCombined, 33);
    assert!(within(r, 0.053), "rate {r}");
}

#[test]
fn m2_size_and_overfit() {
    let r = rate(ModelSpec::m2(), 2000, 4, Method::AsymptoticCombined, 34);
    assert!(within(r, 0.057), "rate {r}");
    let r = rate(ModelSpec::m2(), 500, 5, Method::AsymptoticCombined, 35);
    assert!(within(r, 0.0), "rate {r}");
}

#[test]
fn m1_bootstrap_size() {
    let r = rate(ModelSpec::m1(), 1000, 2, Method::Bootstrap, 36);
    assert!(within(r, 0.058), "rate {r}");
}

#[test]
fn m2_dimension_estimate() {
    let reps = 100;
    let model = ModelSpec::m2();
    let hits = (0..reps)
        .filter(|&r| {
            let mut rng = Stream::new(37, r);
            let x = model.generate(10_000, &mut rng);
            estimate_q(&x, EstimateRule::FixedAlpha(0.05), &TestConfig::default())
                .unwrap()
                .q_hat
                == 4
        })
        .count();
    assert!(hits >= 90, "{hits} of {reps}");
}
