use lowrank_greedy::experiments::{
    run_clustering_experiment, run_recovery_experiment, ClusteringGrid, Method, RecoveryConfig,
    SpectralEstimate,
};
use lowrank_greedy::seed::derive_seed;

fn recovery(n: usize, sigma: f64, r: usize, k: usize, seed: u64) -> RecoveryConfig {
    RecoveryConfig {
        m1: 8,
        m2: 8,
        r,
        n,
        sigma,
        k,
        seed,
    }
}

#[test]
fn noiseless_full_rank_budget_interpolates() {
    let rep = run_recovery_experiment(&recovery(200, 0.0, 2, 8, 3)).unwrap();
    assert!(rep.error <= 1e-6, "{}", rep.error);
    assert!(rep.bound.holds);
}

#[test]
fn zero_target_stays_zero() {
    let rep = run_recovery_experiment(&recovery(100, 0.0, 0, 3, 1)).unwrap();
    assert_eq!(rep.error, 0.0);
    assert_eq!(rep.f_value, 0.0);
}

#[test]
fn underdetermined_design_uses_rsc_bound_or_is_vacuous() {
    let rep = run_recovery_experiment(&recovery(40, 0.1, 2, 2, 5)).unwrap();
    assert!(rep.curvature.is_none());
    assert!(rep.rsc_bound <= 0.0);
    assert!(rep.bound.vacuous);
}

#[test]
fn median_recovery_error_shrinks_with_more_measurements() {
    let median = |n: usize| {
        let mut errs: Vec<f64> = (0..9)
            .map(|i| run_recovery_experiment(&recovery(n, 0.1, 2, 4, derive_seed(17, "median", i))).unwrap().error)
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[4]
    };
    let (a, b, c) = (median(200), median(400), median(800));
    assert!(a >= b && b >= c, "{a} {b} {c}");
}

#[test]
fn single_block_cell_gives_exact_spectral_estimates() {
    let grid = ClusteringGrid {
        n: 12,
        k_true: 3,
        p_values: vec![1.0],
        hyper_ks: vec![3],
        runs: 2,
        seed: 4,
        spectral_estimate: SpectralEstimate::BlockMean,
    };
    let out = run_clustering_experiment(&grid).unwrap();
    assert_eq!(out.rows.len(), 6);
    for row in out.rows.iter().filter(|r| r.method != Method::Greedy) {
        assert_eq!(row.generalization, 0.0, "{row:?}");
    }
}

#[test]
fn grid_rows_are_sorted_and_complete() {
    let mut grid = ClusteringGrid::desk_scale(2, 9);
    grid.p_values = vec![0.6, 0.9];
    let out = run_clustering_experiment(&grid).unwrap();
    assert_eq!(out.rows.len() + out.failures.len(), 2 * 9 * 2);
    let keys: Vec<_> = out.rows.iter().map(|r| (r.p.to_bits(), r.method, r.k, r.run)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(out.to_csv().starts_with("method,k,p,run,reconstruction,generalization\n"));
}
