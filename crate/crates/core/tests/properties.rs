mod suite;

macro_rules! checks {
    ($($name:ident => $path:path),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = $path() {
                    panic!("{e}");
                }
            }
        )*
    };
}

checks! {
    svm_matches_brute_force_qp => suite::qp_oracle::matches_brute_force,
    svm_satisfies_kkt => suite::qp_oracle::kkt_at_convergence,
    backprop_gradient_matches_finite_differences => suite::gradient::matches_finite_differences,
    ranked_list_extraction => suite::extraction::ranked_list_properties,
    rating_extraction_direction => suite::extraction::rating_direction,
    normalization_invariants => suite::normalization::invariants,
    kfold_partitions_groups => suite::kfold::partitions,
    model_round_trip_scores => suite::round_trip::model_scores,
    delimited_table_round_trip => suite::round_trip::delimited_table,
    seeded_runs_are_deterministic => suite::determinism::all_seeded,
}

#[test]
fn registry_lists_every_check() {
    assert_eq!(suite::all().len(), 10);
}
