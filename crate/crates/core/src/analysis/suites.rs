//! Seeded batch suites over the checks in [`crate::analysis`].
//!
//! Every instance draws from its own derived seed, so suites give the same
//! reports regardless of how many threads run them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{
    approx_bound, check_geco_steps, check_greedy_steps, check_subadditivity_lemmas,
    midpoint_concavity_gap, submodularity_ratio, svd_truncation_oracle, BoundReport,
};
use crate::atoms::{Atom, RefitOptions, SupportSet};
use crate::error::{Error, Result};
use crate::experiments::{run_recovery_experiment, RecoveryConfig};
use crate::linalg::{random_unit_vector, sequential_orthogonalize, DenseMatrix, DEFAULT_DROP_TOL};
use crate::objective::{
    check_gradient, quadratic_curvature, BinomialCounts, LinearMeasurements, LogisticPca,
    Objective, QuadraticFull,
};
use crate::seed::{derive_seed, rng_for};
use crate::solvers::{
    partition_round_robin, random_pool, run_distributed_greedy, run_geco, run_greedy,
    run_greedy_on_pool, Fit, SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Quick,
    Thm1,
    Thm3,
    Lemmas,
    Thm4,
    Sandwich,
    Gradients,
    Distributed,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 9] = [
        "quick",
        "thm1",
        "thm3",
        "lemmas",
        "thm4",
        "sandwich",
        "gradients",
        "distributed",
        "all",
    ];

    /// Instance count used when none is given.
    pub fn default_instances(self) -> usize {
        match self {
            Suite::Quick => 4,
            Suite::Thm1 => 200,
            Suite::Thm3 | Suite::Lemmas | Suite::Distributed | Suite::Gradients => 20,
            Suite::Thm4 => 50,
            Suite::Sandwich => 100,
            Suite::All => 0,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx = [
            Suite::Quick,
            Suite::Thm1,
            Suite::Thm3,
            Suite::Lemmas,
            Suite::Thm4,
            Suite::Sandwich,
            Suite::Gradients,
            Suite::Distributed,
            Suite::All,
        ]
        .iter()
        .position(|s| s == self)
        .expect("listed");
        f.write_str(Self::NAMES[idx])
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "quick" => Suite::Quick,
            "thm1" => Suite::Thm1,
            "thm3" => Suite::Thm3,
            "lemmas" => Suite::Lemmas,
            "thm4" => Suite::Thm4,
            "sandwich" => Suite::Sandwich,
            "gradients" => Suite::Gradients,
            "distributed" => Suite::Distributed,
            "all" => Suite::All,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown suite {other:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

/// `Σ_i s_i a_i b_iᵀ + noise·G` with random unit factors, `s_i = 2(rank − i)`
/// and `G` standard Gaussian.
pub fn lowrank_plus_noise(n: usize, d: usize, rank: usize, noise: f64, seed: u64) -> DenseMatrix {
    let mut rng = rng_for(seed, "lowrank", 0);
    let mut y = DenseMatrix::random_normal(n, d, &mut rng).scale(noise);
    for i in 0..rank {
        let a = random_unit_vector(n, &mut rng);
        let b = random_unit_vector(d, &mut rng);
        y.add_outer(2.0 * (rank - i) as f64, &a, &b);
    }
    y
}

/// Gaussian measurement loss on `n × d` matrices with `samples` measurements
/// of a random target.
pub fn random_linear_measurements(n: usize, d: usize, samples: usize, seed: u64) -> Result<LinearMeasurements> {
    let mut rng = rng_for(seed, "linear-design", 0);
    let design = DenseMatrix::random_normal(samples, n * d, &mut rng);
    let y: Vec<f64> = (0..samples).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    LinearMeasurements::from_design((n, d), design, y)
}

fn random_atoms(n: usize, d: usize, count: usize, rng: &mut impl Rng) -> Vec<Atom> {
    (0..count).map(|_| Atom::random(n, d, rng)).collect()
}

/// A quadratic loss for instance `seed`: full observation on even `index`,
/// Gaussian measurements (well-conditioned, `3·n·d + 10` samples) on odd.
fn quadratic_instance(n: usize, d: usize, index: usize, seed: u64) -> Result<Box<dyn Objective>> {
    if index.is_multiple_of(2) {
        let mut rng = rng_for(seed, "quadratic-target", 0);
        Ok(Box::new(QuadraticFull::new(DenseMatrix::random_normal(n, d, &mut rng))))
    } else {
        Ok(Box::new(random_linear_measurements(n, d, 3 * n * d + 10, seed)?))
    }
}

fn flatten(parts: Vec<Result<Vec<BoundReport>>>) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Submodularity ratio against `m/M` on random quadratic instances with
/// dimensions up to 8×8, `|L| ≤ 2`, `|S| ≤ 3`.
pub fn thm1_suite(instances: usize, root: u64) -> Result<Vec<BoundReport>> {
    let opts = RefitOptions::default();
    let parts = (0..instances)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(root, "thm1", i as u64);
            let mut rng = rng_for(seed, "thm1-shape", 0);
            let l_size = rng.random_range(0..=2usize);
            let s_size = rng.random_range(1..=3usize);
            let lo = (l_size + s_size).max(2);
            let n = rng.random_range(lo..=8);
            let d = rng.random_range(lo..=8);
            let obj = quadratic_instance(n, d, i, seed)?;
            let curvature = quadratic_curvature(obj.as_ref())?;
            let l_atoms = random_atoms(n, d, l_size, &mut rng);
            let l = SupportSet::from_atoms(sequential_orthogonalize(&l_atoms, &SupportSet::new(), DEFAULT_DROP_TOL));
            let s = random_atoms(n, d, s_size, &mut rng);
            let name = format!("thm1_{}", obj.name());
            Ok(vec![match submodularity_ratio(obj.as_ref(), &l, &s, &opts, DEFAULT_DROP_TOL) {
                Ok(gamma) => BoundReport::at_least(name, seed, gamma, curvature.ratio()),
                Err(Error::DenominatorZero(_)) => BoundReport::vacuous(name, seed),
                Err(e) => return Err(e),
            }])
        })
        .collect();
    flatten(parts)
}

/// GECO on 20×15 rank-5-plus-noise targets: the rank-5 Eckart–Young value at
/// `k = 5` and the approximation ratio for every `k ∈ 1..=10` with `r = 5`.
pub fn thm3_suite(instances: usize, root: u64) -> Result<Vec<BoundReport>> {
    const R: usize = 5;
    let parts = (0..instances)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(root, "thm3", i as u64);
            let y = lowrank_plus_noise(20, 15, R, 0.1, seed);
            let (f_opt, _) = svd_truncation_oracle(&y, R, seed)?;
            let obj = QuadraticFull::new(y);
            let cfg = SolverConfig::geco(10, seed);
            let fit = run_geco(&obj, &cfg)?;
            let f = fit.history.f_values();
            let mut out = vec![BoundReport::at_least(
                "eckart_young_k5",
                seed,
                f[R.min(f.len() - 1)],
                0.999 * f_opt,
            )];
            for k in 1..=10 {
                let f_k = f[k.min(f.len() - 1)];
                let bound = approx_bound(cfg.tau, 1.0, k, R, true);
                out.push(BoundReport::at_least(format!("geco_ratio_k{k}_r{R}"), seed, f_k, bound * f_opt));
            }
            Ok(out)
        })
        .collect();
    flatten(parts)
}

/// Per-iteration progress of Greedy and GECO against the rank-5 optimum on
/// the same targets as [`thm3_suite`].
pub fn lemma_suite(instances: usize, root: u64) -> Result<Vec<BoundReport>> {
    const R: usize = 5;
    let parts = (0..instances)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(root, "thm3", i as u64);
            let y = lowrank_plus_noise(20, 15, R, 0.1, seed);
            let (f_opt, optimum) = svd_truncation_oracle(&y, R, seed)?;
            let obj = QuadraticFull::new(y);
            let curvature = quadratic_curvature(&obj)?;
            let geco_cfg = SolverConfig::geco(R, seed);
            let geco = run_geco(&obj, &geco_cfg)?;
            let greedy_cfg = SolverConfig::greedy(R, seed);
            let greedy = run_greedy(&obj, &greedy_cfg)?;
            let mut out = check_geco_steps(&geco.history, f_opt, geco_cfg.tau, &curvature, R, seed);
            out.extend(check_greedy_steps(
                &greedy.history,
                f_opt,
                greedy_cfg.tau,
                curvature.ratio(),
                R,
                seed,
            ));
            out.extend(greedy_final_ratio(&obj, &greedy, &optimum, f_opt, greedy_cfg.tau, curvature.ratio(), seed)?);
            Ok(out)
        })
        .collect();
    flatten(parts)
}

/// Final greedy value against `1 − exp(−τγk/r)·f_opt`, once with `γ`
/// measured after the run and once with the curvature ratio in its place.
///
/// The measured `γ` is the smallest ratio between each greedy prefix and the
/// rank-`r` optimum atoms; prefixes where the optimum adds nothing are skipped.
fn greedy_final_ratio(
    obj: &dyn Objective,
    fit: &Fit,
    optimum: &[Atom],
    f_opt: f64,
    tau: f64,
    curvature_ratio: f64,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    let opts = RefitOptions::default();
    let atoms = fit.support.atoms();
    let k = atoms.len();
    let r = optimum.len();
    let f_k = fit.history.f_values().last().copied().unwrap_or(0.0);
    let mut gamma = f64::INFINITY;
    for i in 0..k {
        let prefix = SupportSet::from_atoms(atoms[..i].to_vec());
        match submodularity_ratio(obj, &prefix, optimum, &opts, DEFAULT_DROP_TOL) {
            Ok(g) => gamma = gamma.min(g),
            Err(Error::DenominatorZero(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let measured = if gamma.is_finite() {
        BoundReport::at_least(
            format!("greedy_ratio_measured_k{k}_r{r}"),
            seed,
            f_k,
            approx_bound(tau, gamma, k, r, false) * f_opt,
        )
    } else {
        BoundReport::vacuous(format!("greedy_ratio_measured_k{k}_r{r}"), seed)
    };
    let conservative = BoundReport::at_least(
        format!("greedy_ratio_curvature_k{k}_r{r}"),
        seed,
        f_k,
        approx_bound(tau, curvature_ratio, k, r, false) * f_opt,
    );
    Ok(vec![measured, conservative])
}

/// Recovery bound on 8×8 rank-2 targets with 600 noisy measurements and
/// four GECO steps.
pub fn thm4_suite(instances: usize, root: u64) -> Result<Vec<BoundReport>> {
    let parts = (0..instances)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(root, "thm4", i as u64);
            let cfg = RecoveryConfig {
                m1: 8,
                m2: 8,
                r: 2,
                n: 600,
                sigma: 0.1,
                k: 4,
                seed,
            };
            Ok(vec![run_recovery_experiment(&cfg)?.bound])
        })
        .collect();
    flatten(parts)
}

/// `g/(2M) ≤ f(S) ≤ g/(2m)` on random quadratic instances with up to three
/// orthonormalized atoms.
pub fn sandwich_suite(instances: usize, root: u64) -> Result<Vec<BoundReport>> {
    let opts = RefitOptions::default();
    let parts = (0..instances)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(root, "sandwich", i as u64);
            let mut rng = rng_for(seed, "sandwich-shape", 0);
            let n = rng.random_range(3..=8usize);
            let d = rng.random_range(3..=8usize);
            let obj = quadratic_instance(n, d, i, seed)?;
            let curvature = quadratic_curvature(obj.as_ref())?;
            let size = rng.random_range(0..=3usize);
            let atoms = random_atoms(n, d, size, &mut rng);
            let s = SupportSet::from_atoms(sequential_orthogonalize(&atoms, &SupportSet::new(), DEFAULT_DROP_TOL));
            let (mut lower, mut upper) = check_subadditivity_lemmas(obj.as_ref(), &s, &curvature, &opts, seed)?;
            lower.check = format!("sandwich_lower_{}", obj.name());
            upper.check = format!("sandwich_upper_{}", obj.name());
            Ok(vec![lower, upper])
        })
        .collect();
    flatten(parts)
}

/// The four losses on seeded random data of the given shape.
pub fn loss_zoo(n: usize, d: usize, seed: u64) -> Result<Vec<Box<dyn Objective>>> {
    let mut rng = rng_for(seed, "loss-zoo", 0);
    let y = DenseMatrix::random_normal(n, d, &mut rng);
    let binary = DenseMatrix::from_fn(n, d, |_, _| f64::from(rng.random_bool(0.5)));
    let probs = DenseMatrix::from_fn(n, d, |_, _| rng.random::<f64>());
    Ok(vec![
        Box::new(QuadraticFull::new(y)),
        Box::new(random_linear_measurements(n, d, 10, seed)?),
        Box::new(LogisticPca::new(binary)?),
        Box::new(BinomialCounts::new(probs)?),
    ])
}

/// Finite-difference gradient agreement at `points` random parameters and
/// midpoint concavity on `segments` random segments, per loss.
pub fn gradient_suite(points: usize, segments: usize, root: u64) -> Result<Vec<BoundReport>> {
    let (n, d) = (4, 3);
    let losses = loss_zoo(n, d, root)?;
    let parts = losses
        .par_iter()
        .enumerate()
        .map(|(li, obj)| {
            let mut out = Vec::new();
            for p in 0..points {
                let seed = derive_seed(root, "gradient-point", (li * points + p) as u64);
                let mut rng = rng_for(seed, "theta", 0);
                let theta = DenseMatrix::random_normal(n, d, &mut rng).scale(2.0);
                let err = check_gradient(obj.as_ref(), &theta, 1e-5)?;
                out.push(BoundReport::at_most(format!("gradient_{}", obj.name()), seed, err, 1e-5));
            }
            for s in 0..segments {
                let seed = derive_seed(root, "concavity", (li * segments + s) as u64);
                let mut rng = rng_for(seed, "segment", 0);
                let a = DenseMatrix::random_normal(n, d, &mut rng).scale(3.0);
                let b = DenseMatrix::random_normal(n, d, &mut rng).scale(3.0);
                let gap = midpoint_concavity_gap(obj.as_ref(), &a, &b);
                out.push(BoundReport::at_least(format!("concavity_{}", obj.name()), seed, gap, -1e-9));
            }
            Ok(out)
        })
        .collect();
    flatten(parts)
}

/// Partitioned greedy on 10×8 full-observation targets with a 24-atom pool:
/// a single partition reproduces pool greedy bit for bit, and the returned
/// value never falls below the best partition.
pub fn distributed_suite(instances: usize, root: u64) -> Result<Vec<BoundReport>> {
    let parts = (0..instances)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(root, "distributed", i as u64);
            let mut rng = rng_for(seed, "distributed-target", 0);
            let obj = QuadraticFull::new(DenseMatrix::random_normal(10, 8, &mut rng));
            let cfg = SolverConfig::greedy(3, seed);
            let pool = random_pool(10, 8, 24, seed);
            let single = run_greedy_on_pool(&obj, &pool, &cfg)?;
            let (one, _) = run_distributed_greedy(&obj, std::slice::from_ref(&pool), &cfg)?;
            let identical = one.support == single.support
                && one.solution.h == single.solution.h
                && one.history == single.history;
            let mut out = vec![BoundReport::at_least(
                "distributed_l1_identical",
                seed,
                f64::from(u8::from(identical)),
                1.0,
            )];
            for l in [2, 3] {
                let (fit, report) = run_distributed_greedy(&obj, &partition_round_robin(&pool, l), &cfg)?;
                let best = report.partition_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                out.push(BoundReport::at_least(format!("distributed_l{l}_vs_partitions"), seed, fit.value(), best));
            }
            Ok(out)
        })
        .collect();
    flatten(parts)
}

/// Runs `suite` with `instances` instances (or the suite default) from the
/// root seed. The `quick` suite runs a few instances of each component;
/// `all` runs every component at its default size.
pub fn run_suite(suite: Suite, instances: Option<usize>, root: u64) -> Result<Vec<BoundReport>> {
    let count = instances.unwrap_or_else(|| suite.default_instances());
    match suite {
        Suite::Thm1 => thm1_suite(count, root),
        Suite::Thm3 => thm3_suite(count, root),
        Suite::Lemmas => lemma_suite(count, root),
        Suite::Thm4 => thm4_suite(count, root),
        Suite::Sandwich => sandwich_suite(count, root),
        Suite::Gradients => gradient_suite(count, 50usize.max(count), root),
        Suite::Distributed => distributed_suite(count, root),
        Suite::Quick => {
            let mut out = thm3_suite(count.min(2), root)?;
            out.extend(lemma_suite(count.min(2), root)?);
            out.extend(thm4_suite(count, root)?);
            out.extend(sandwich_suite(count, root)?);
            out.extend(gradient_suite(count, count, root)?);
            out.extend(distributed_suite(count, root)?);
            Ok(out)
        }
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Thm1,
                Suite::Thm3,
                Suite::Lemmas,
                Suite::Thm4,
                Suite::Sandwich,
                Suite::Gradients,
                Suite::Distributed,
            ] {
                out.extend(run_suite(s, instances, root)?);
            }
            Ok(out)
        }
    }
}

/// Reports that are evaluated and fail.
pub fn failures(reports: &[BoundReport]) -> Vec<&BoundReport> {
    reports.iter().filter(|r| !r.vacuous && !r.holds).collect()
}
