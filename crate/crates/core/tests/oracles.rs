//! Library results compared against independent dense oracles.

use lowrank_greedy::analysis::{restricted_optimum, svd_truncation_oracle, submodularity_ratio};
use lowrank_greedy::atoms::{refit, set_value, Atom, RefitOptions, SupportSet};
use lowrank_greedy::experiments::{
    kmeans, laplacian, sbm_generate, spectral_clustering, SbmConfig,
};
use lowrank_greedy::linalg::{
    project_rowcol, sequential_orthogonalize, top_singular_pair, DenseMatrix, DEFAULT_DROP_TOL,
};
use lowrank_greedy::objective::{
    check_gradient, gaussian_rsc_bound, quadratic_curvature, LinearMeasurements, LogisticPca,
    Objective, QuadraticFull,
};
use lowrank_greedy::seed::rng_for;
use lowrank_greedy::solvers::{
    greedy_select, omp_select, random_pool, run_distributed_greedy, run_geco, partition_round_robin,
    SolverConfig, DEFAULT_OMP_TAU,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Singular values (descending) from the eigenvalues of `GᵀG`.
fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let g = to_na(m);
    let eig = SymmetricEigen::new(g.transpose() * &g);
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Top singular pair (u, v) via the eigenvectors of `GᵀG`.
fn top_pair(m: &DenseMatrix) -> (Vec<f64>, Vec<f64>, f64) {
    let g = to_na(m);
    let eig = SymmetricEigen::new(g.transpose() * &g);
    let idx = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(idx).into_owned();
    let gv = &g * &v;
    let sigma = gv.norm();
    let u = gv / sigma;
    (u.iter().copied().collect(), v.iter().copied().collect(), sigma)
}

fn gaussian(n: usize, d: usize, seed: u64) -> DenseMatrix {
    DenseMatrix::random_normal(n, d, &mut rng_for(seed, "oracle-test", 0))
}

#[test]
fn top_singular_value_matches_eigen_oracle() {
    for seed in 0..10 {
        let g = gaussian(5, 4, seed);
        let t = top_singular_pair(&g, 1e-12, 100_000, seed).unwrap();
        let oracle = singular_values(&g)[0];
        assert!((t.sigma - oracle).abs() <= 1e-8, "seed {seed}: {} vs {oracle}", t.sigma);
    }
}

#[test]
fn svd_truncation_matches_eigen_oracle() {
    for seed in 0..5 {
        let y = gaussian(8, 6, seed);
        let (f, atoms) = svd_truncation_oracle(&y, 3, seed).unwrap();
        let oracle: f64 = singular_values(&y).iter().take(3).map(|s| s * s).sum();
        assert!((f - oracle).abs() <= 1e-8 * oracle.max(1.0), "seed {seed}: {f} vs {oracle}");
        // the top-k singular atoms attain the same value through the refit
        let support = SupportSet::from_atoms(atoms);
        let v = set_value(&support, &QuadraticFull::new(y), &RefitOptions::default()).unwrap();
        assert!((v - oracle).abs() <= 1e-8 * oracle.max(1.0));
    }
}

#[test]
fn projection_is_idempotent_after_orthogonalization() {
    let mut rng = rng_for(3, "proj", 0);
    let atoms: Vec<Atom> = (0..3).map(|_| Atom::random(7, 5, &mut rng)).collect();
    let s = SupportSet::from_atoms(sequential_orthogonalize(&atoms, &SupportSet::new(), DEFAULT_DROP_TOL));
    let g = gaussian(7, 5, 11);
    let once = project_rowcol(&g, &s.u_rows(), &s.v_rows()).unwrap();
    let twice = project_rowcol(&once, &s.u_rows(), &s.v_rows()).unwrap();
    assert!(once.sub(&twice).max_abs() <= 1e-12);
    assert!(once.frobenius_norm() <= g.frobenius_norm() + 1e-12);
}

#[test]
fn orthogonalized_atoms_are_orthogonal_to_each_other_and_support() {
    let mut rng = rng_for(5, "orth", 0);
    let l_atoms: Vec<Atom> = (0..2).map(|_| Atom::random(8, 6, &mut rng)).collect();
    let l = SupportSet::from_atoms(sequential_orthogonalize(&l_atoms, &SupportSet::new(), DEFAULT_DROP_TOL));
    let s: Vec<Atom> = (0..4).map(|_| Atom::random(8, 6, &mut rng)).collect();
    let out = sequential_orthogonalize(&s, &l, DEFAULT_DROP_TOL);
    assert_eq!(out.len(), 4);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for (i, a) in out.iter().enumerate() {
        for b in out.iter().skip(i + 1).chain(l.atoms()) {
            assert!(dot(a.u(), b.u()).abs() <= 1e-10);
            assert!(dot(a.v(), b.v()).abs() <= 1e-10);
        }
    }
}

#[test]
fn gram_curvature_matches_eigen_oracle() {
    let mut rng = rng_for(9, "design", 0);
    let design = DenseMatrix::random_normal(200, 12, &mut rng);
    let y: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
    let loss = LinearMeasurements::from_design((4, 3), design.clone(), y).unwrap();
    let c = quadratic_curvature(&loss).unwrap();
    let a = to_na(&design);
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let lo = 2.0 / 200.0 * eig.eigenvalues.min();
    let hi = 2.0 / 200.0 * eig.eigenvalues.max();
    assert!((c.m - lo).abs() <= 1e-8, "{} vs {lo}", c.m);
    assert!((c.big_m - hi).abs() <= 1e-8, "{} vs {hi}", c.big_m);
}

#[test]
fn linear_measurement_gradient_matches_finite_differences() {
    let mut rng = rng_for(1, "lm", 0);
    let design = DenseMatrix::random_normal(10, 12, &mut rng);
    let y: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
    let loss = LinearMeasurements::from_design((4, 3), design, y).unwrap();
    let theta = DenseMatrix::random_normal(4, 3, &mut rng);
    assert!(check_gradient(&loss, &theta, 1e-5).unwrap() <= 1e-6);
}

#[test]
fn rsc_bound_reevaluated_independently() {
    let v = gaussian_rsc_bound(1_000_000, 100.0, 2, 2);
    // 1/32 − 162·4·ln(100)/10⁶ evaluated in a different association order
    let oracle = 0.03125 - (4.0 * 162.0 / 1e6) * 100f64.ln();
    assert!((v - oracle).abs() <= 1e-15);
    assert!((gaussian_rsc_bound(10_368, std::f64::consts::E, 1, 1)).abs() < 1e-16);
}

/// Scalar maximizer of `h ↦ ℓ(h·uvᵀ) − ℓ(0)` by grid search on [−20, 20]
/// followed by golden-section refinement.
fn scalar_oracle(obj: &dyn Objective, atom: &Atom) -> f64 {
    let x = atom.to_matrix();
    let base = obj.value(&obj.zero_point());
    let val = |h: f64| obj.value(&x.scale(h)) - base;
    let mut best = (0.0, val(0.0));
    let steps = 40_000;
    for i in 0..=steps {
        let h = -20.0 + 40.0 * i as f64 / steps as f64;
        let v = val(h);
        if v > best.1 {
            best = (h, v);
        }
    }
    let (mut a, mut b) = (best.0 - 1e-3, best.0 + 1e-3);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if val(c) > val(d) {
            b = d;
        } else {
            a = c;
        }
    }
    val(0.5 * (a + b)).max(best.1)
}

#[test]
fn logistic_single_atom_refit_matches_scalar_search() {
    for seed in 0..3 {
        let mut rng = rng_for(seed, "logit", 0);
        let x = DenseMatrix::from_fn(3, 3, |_, _| f64::from(rng.random_bool(0.5)));
        let obj = LogisticPca::new(x).unwrap();
        let atom = Atom::random(3, 3, &mut rng);
        let f = refit(&SupportSet::from_atoms(vec![atom.clone()]), &obj, &RefitOptions::default())
            .unwrap()
            .f_value;
        let oracle = scalar_oracle(&obj, &atom);
        assert!((f - oracle).abs() <= 1e-5, "seed {seed}: {f} vs {oracle}");
    }
}

#[test]
fn geco_matches_truncated_svd_on_full_quadratic() {
    let y = gaussian(20, 15, 4);
    let fit = run_geco(&QuadraticFull::new(y.clone()), &SolverConfig::geco(5, 4)).unwrap();
    let oracle: f64 = singular_values(&y).iter().take(5).map(|s| s * s).sum();
    assert!((fit.value() - oracle).abs() <= 1e-6 * oracle);
}

#[test]
fn rank_one_target_recovered_in_one_step() {
    let mut rng = rng_for(2, "r1", 0);
    let u: Vec<f64> = (0..6).map(|_| rng.random::<f64>() - 0.5).collect();
    let v: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
    let y = DenseMatrix::outer(&u, &v).scale(3.0);
    let fit = run_geco(&QuadraticFull::new(y.clone()), &SolverConfig::geco(1, 0)).unwrap();
    let s1 = singular_values(&y)[0];
    assert!((fit.value() - s1 * s1).abs() <= 1e-8 * y.frobenius_sq());
    assert!((fit.value() - y.frobenius_sq()).abs() <= 1e-8 * y.frobenius_sq());
}

#[test]
fn omp_selection_certifies_fraction_of_top_singular_value() {
    let mut rng = rng_for(6, "omp", 0);
    let x = DenseMatrix::from_fn(7, 5, |_, _| f64::from(rng.random_bool(0.4)));
    let obj = LogisticPca::new(x).unwrap();
    let b = DenseMatrix::random_normal(7, 5, &mut rng);
    let sel = omp_select(&obj, &b, DEFAULT_OMP_TAU, 3, 20_000).unwrap();
    let grad = obj.gradient(&b);
    let inner = grad.inner(&sel.atom.to_matrix());
    let (_, _, sigma1) = top_pair(&grad);
    assert!(inner >= DEFAULT_OMP_TAU * sigma1 - 1e-12, "{inner} vs {sigma1}");
}

#[test]
fn greedy_selection_agrees_with_exhaustive_rescan() {
    let obj = QuadraticFull::new(gaussian(6, 5, 8));
    let opts = RefitOptions::default();
    let empty = SupportSet::new();
    let current = refit(&empty, &obj, &opts).unwrap();
    let pool = random_pool(6, 5, 16, 8);
    let sel = greedy_select(&obj, &empty, &current, &pool, 1.0, &opts, DEFAULT_DROP_TOL).unwrap();
    let gains: Vec<f64> = pool
        .iter()
        .map(|a| set_value(&SupportSet::from_atoms(vec![a.clone()]), &obj, &opts).unwrap())
        .collect();
    let best = gains
        .iter()
        .enumerate()
        .fold(0, |b, (i, &g)| if g > gains[b] { i } else { b });
    assert_eq!(sel.index, best);
}

#[test]
fn top_singular_atom_wins_a_pool_containing_it() {
    let y = gaussian(6, 5, 12);
    let obj = QuadraticFull::new(y.clone());
    let (u, v, _) = top_pair(&y);
    let mut pool = random_pool(6, 5, 7, 12);
    pool.insert(3, Atom::normalized(u, v).unwrap());
    let opts = RefitOptions::default();
    let empty = SupportSet::new();
    let current = refit(&empty, &obj, &opts).unwrap();
    let sel = greedy_select(&obj, &empty, &current, &pool, 1.0, &opts, DEFAULT_DROP_TOL).unwrap();
    assert_eq!(sel.index, 3);
}

#[test]
fn distributed_never_returns_less_than_best_partition() {
    for seed in 0..5 {
        let obj = QuadraticFull::new(gaussian(10, 8, seed));
        let pool = random_pool(10, 8, 24, seed);
        let cfg = SolverConfig::greedy(3, seed);
        let (fit, report) = run_distributed_greedy(&obj, &partition_round_robin(&pool, 2), &cfg).unwrap();
        let best = report.partition_values.iter().cloned().fold(f64::MIN, f64::max);
        assert!(fit.value() >= best - 1e-9);
        assert!(fit.value() >= report.merged_value - 1e-9);
    }
}

#[test]
fn restricted_optimum_dominates_each_subset() {
    let obj = QuadraticFull::new(gaussian(5, 4, 1));
    let pool = random_pool(5, 4, 6, 1);
    let opts = RefitOptions::default();
    let best = restricted_optimum(&obj, &pool, 2, &opts, DEFAULT_DROP_TOL).unwrap();
    let pair = SupportSet::from_atoms(sequential_orthogonalize(&pool[..2], &SupportSet::new(), DEFAULT_DROP_TOL));
    assert!(best >= set_value(&pair, &obj, &opts).unwrap() - 1e-12);
}

#[test]
fn singleton_ratio_is_exactly_one() {
    let obj = QuadraticFull::new(gaussian(4, 4, 2));
    let s = random_pool(4, 4, 1, 2);
    let g = submodularity_ratio(&obj, &SupportSet::new(), &s, &RefitOptions::default(), DEFAULT_DROP_TOL).unwrap();
    assert_eq!(g, 1.0);
}

/// Fraction of nodes on which two labelings agree under the best matching of
/// label names (brute force over permutations of up to 6 labels).
fn agreement(a: &[usize], b: &[usize], k: usize) -> f64 {
    fn perms(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }
    perms(k)
        .iter()
        .map(|p| a.iter().zip(b).filter(|(&x, &y)| p[x] == y).count())
        .max()
        .unwrap() as f64
        / a.len() as f64
}

#[test]
fn spectral_clustering_agrees_with_eigen_oracle() {
    for seed in 0..3 {
        let s = sbm_generate(&SbmConfig { n: 60, k_true: 3, p: 0.9, seed }).unwrap();
        for normalized in [false, true] {
            let ours = spectral_clustering(&s.adjacency, 3, normalized, seed).unwrap();
            let eig = SymmetricEigen::new(to_na(&laplacian(&s.adjacency, normalized)));
            let mut order: Vec<usize> = (0..60).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let points: Vec<Vec<f64>> = (0..60)
                .map(|i| order[..3].iter().map(|&c| eig.eigenvectors[(i, c)]).collect())
                .collect();
            let oracle = kmeans(&points, 3, seed, 10).unwrap().labels;
            let agree = agreement(&ours, &oracle, 3);
            assert!(agree >= 0.95, "seed {seed} normalized={normalized}: {agree}");
        }
    }
}

#[test]
fn block_graph_is_recovered_exactly() {
    let s = sbm_generate(&SbmConfig { n: 12, k_true: 3, p: 1.0, seed: 0 }).unwrap();
    for normalized in [false, true] {
        let labels = spectral_clustering(&s.adjacency, 3, normalized, 1).unwrap();
        assert_eq!(agreement(&labels, &s.labels, 3), 1.0);
    }
}

#[test]
fn laplacian_zero_eigenvalue_multiplicity_counts_components() {
    let s = sbm_generate(&SbmConfig { n: 12, k_true: 4, p: 1.0, seed: 0 }).unwrap();
    let eig = SymmetricEigen::new(to_na(&laplacian(&s.adjacency, false)));
    let zeros = eig.eigenvalues.iter().filter(|l| l.abs() < 1e-9).count();
    assert_eq!(zeros, 4);
}

#[test]
fn sbm_edge_rate_concentrates() {
    let p = 0.8;
    for seed in 0..20 {
        let s = sbm_generate(&SbmConfig { n: 100, k_true: 5, p, seed }).unwrap();
        let (mut edges, mut pairs) = (0.0, 0.0);
        for i in 0..100 {
            for j in (i + 1)..100 {
                if s.labels[i] == s.labels[j] {
                    pairs += 1.0;
                    edges += s.adjacency[(i, j)];
                }
            }
        }
        let rate = edges / pairs;
        assert!((rate - p).abs() <= 3.0 * (p * (1.0 - p) / pairs).sqrt(), "seed {seed}: {rate}");
    }
}

#[test]
fn kmeans_beats_random_assignment() {
    let centers = vec![vec![0.0, 0.0], vec![5.0, 0.0], vec![0.0, 5.0]];
    let pts = lowrank_greedy::experiments::gaussian_blobs(&centers, 20, 0.5, 3);
    let res = kmeans(&pts, 3, 3, 10).unwrap();
    let mut rng = rng_for(3, "random-assign", 0);
    let labels: Vec<usize> = (0..pts.len()).map(|_| rng.random_range(0..3)).collect();
    let mut random_inertia = 0.0;
    for c in 0..3 {
        let members: Vec<&Vec<f64>> = pts.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
        let mean: Vec<f64> = (0..2)
            .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len().max(1) as f64)
            .collect();
        random_inertia += members
            .iter()
            .map(|p| p.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
            .sum::<f64>();
    }
    assert!(res.inertia <= random_inertia);
}
