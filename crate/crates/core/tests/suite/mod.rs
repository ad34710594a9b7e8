//! Property and oracle checks shared by the core test target and the
//! acceptance target. Each check returns `Err` with a description of the
//! first counterexample.

pub mod determinism;
pub mod extraction;
pub mod gradient;
pub mod kfold;
pub mod normalization;
pub mod qp_oracle;
pub mod round_trip;

pub type Check = fn() -> Result<(), String>;

pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("ranking SVM matches brute-force QP (m <= 6)", qp_oracle::matches_brute_force),
        ("ranking SVM satisfies KKT at convergence", qp_oracle::kkt_at_convergence),
        ("backprop gradient matches central differences", gradient::matches_finite_differences),
        ("pair extraction count, antisymmetry, transitivity", extraction::ranked_list_properties),
        ("rating orders respect higher_is_better", extraction::rating_direction),
        ("min-max and z-score invariants", normalization::invariants),
        ("k-fold splits partition the groups", kfold::partitions),
        ("model JSON round trip scores bit-identically", round_trip::model_scores),
        ("data table delimited round trip", round_trip::delimited_table),
        ("seed determinism of learners and generator", determinism::all_seeded),
    ]
}

/// Run a proptest strategy with a fixed seed so failures reproduce.
pub fn run<S: proptest::strategy::Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), proptest::test_runner::TestCaseError>,
) -> Result<(), String> {
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]);
    let mut runner = TestRunner::new_with_rng(config, rng);
    runner.run(&strategy, test).map_err(|e| e.to_string())
}
