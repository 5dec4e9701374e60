//! Greedy atom selection.
//!
//! * [`run_greedy`] scores every candidate by the gain of a full refit and
//!   keeps the best (within `tau`). The atom set is infinite, so candidates at
//!   each step are the top singular pair of the gradient plus seeded random
//!   atoms; guarantees then hold relative to this candidate pool.
//! * [`run_geco`] takes the top singular pair of the gradient directly.
//! * [`run_distributed_greedy`] runs the pool-based greedy on disjoint atom
//!   pools, then once more on the union of what the partitions selected.
//!
//! Every accepted atom is orthogonalized against the current support before
//! the refit, so u-factors (and v-factors) of the support stay orthonormal.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::atoms::{refit, refit_warm, Atom, RefitOptions, RefitSolution, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{sequential_orthogonalize, top_singular_pair, DenseMatrix, DEFAULT_DROP_TOL};
use crate::objective::Objective;
use crate::seed::{derive_seed, rng_for};

/// Default OMP approximation factor; the power iteration is certified to
/// this accuracy.
pub const DEFAULT_OMP_TAU: f64 = 1.0 - 1e-6;

/// Relative gain below which a run stops early.
pub const EARLY_STOP_GAIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Target rank (number of greedy steps).
    pub k: usize,
    pub tau: f64,
    /// Candidates per greedy step, including the top singular pair.
    pub pool_size: usize,
    pub seed: u64,
    pub refit: RefitOptions,
    pub power_max_iter: usize,
    pub drop_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 5,
            tau: DEFAULT_OMP_TAU,
            pool_size: 16,
            seed: 0,
            refit: RefitOptions::default(),
            power_max_iter: 20_000,
            drop_tol: DEFAULT_DROP_TOL,
        }
    }
}

impl SolverConfig {
    /// Settings for [`run_geco`].
    pub fn geco(k: usize, seed: u64) -> Self {
        SolverConfig {
            k,
            seed,
            ..Self::default()
        }
    }

    /// Settings for [`run_greedy`]: exact argmax over the pool.
    pub fn greedy(k: usize, seed: u64) -> Self {
        SolverConfig {
            k,
            seed,
            tau: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidInput(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if self.pool_size == 0 {
            return Err(Error::InvalidInput("pool_size must be at least 1".into()));
        }
        if !(self.refit.tol > 0.0) {
            return Err(Error::InvalidInput("refit tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// All `k` steps were taken.
    BudgetReached,
    /// The gradient at the current iterate is numerically zero.
    GradientVanished,
    /// The best available gain fell below the early-stopping threshold.
    NoGain,
    /// The selected atom lies in the span of the support.
    AtomDependent,
    /// A fixed candidate pool ran out of atoms.
    PoolExhausted,
}

impl StopReason {
    /// Whether the run ended because no further progress was possible.
    pub fn is_converged(self) -> bool {
        !matches!(self, StopReason::BudgetReached)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based step number.
    pub iteration: usize,
    pub atom: Atom,
    /// `f(S_i) − f(S_{i−1})`.
    pub gain: f64,
    pub f_after: f64,
    /// Top singular value of the gradient at selection time, when computed.
    pub sigma_estimate: Option<f64>,
    pub refit_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    oracle_opt: Option<f64>,
}

impl RunHistory {
    fn new() -> Self {
        RunHistory {
            records: Vec::new(),
            stop: StopReason::BudgetReached,
            oracle_opt: None,
        }
    }

    /// `f(S_0), f(S_1), …` with `f(S_0) = 0`.
    pub fn f_values(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.records.iter().map(|r| r.f_after))
            .collect()
    }

    pub fn gains(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gain).collect()
    }

    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.f_after)
    }

    /// Attaches an oracle optimum `f(S*)` so remaining gaps can be reported.
    pub fn set_oracle(&mut self, f_opt: f64) {
        self.oracle_opt = Some(f_opt);
    }

    pub fn oracle(&self) -> Option<f64> {
        self.oracle_opt
    }

    /// `B(i) = f(S*) − f(S_i)` for `i = 0..=len`.
    pub fn remaining_gaps(&self) -> Option<Vec<f64>> {
        let opt = self.oracle_opt?;
        Some(self.f_values().into_iter().map(|f| opt - f).collect())
    }

    /// `iteration,gain,f_after,sigma_estimate` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,gain,f_after,sigma_estimate\n");
        for r in &self.records {
            let sigma = r.sigma_estimate.map(|s| format!("{s:e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{:e},{:e},{}", r.iteration, r.gain, r.f_after, sigma);
        }
        out
    }
}

/// Output of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub support: SupportSet,
    pub solution: RefitSolution,
    pub history: RunHistory,
}

impl Fit {
    pub fn value(&self) -> f64 {
        self.solution.f_value
    }

    pub fn estimate(&self) -> &DenseMatrix {
        &self.solution.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpSelection {
    pub atom: Atom,
    pub sigma: f64,
}

/// Top singular pair of `∇ℓ(B)`, certified to `⟨∇ℓ(B), uvᵀ⟩ ≥ τ·σ₁`.
///
/// Returns [`Error::Converged`] when the gradient is numerically zero.
pub fn omp_select(
    obj: &dyn Objective,
    b: &DenseMatrix,
    tau: f64,
    seed: u64,
    max_iter: usize,
) -> Result<OmpSelection> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidInput(format!("tau must lie in (0, 1], got {tau}")));
    }
    let grad = obj.gradient(b);
    let tol = (1.0 - tau).clamp(1e-10, 0.5);
    let triple = match top_singular_pair(&grad, tol, max_iter, seed) {
        Ok(t) => t,
        Err(Error::ZeroMatrix(_)) => return Err(Error::Converged),
        // near-degenerate top pair: any vector of the leading cluster will do
        Err(Error::NonConverged { iters, last }) => {
            log::warn!("power iteration hit {iters} iterations; using last iterate");
            *last
        }
        Err(e) => return Err(e),
    };
    Ok(OmpSelection {
        atom: Atom::from_unit_unchecked(triple.u, triple.v),
        sigma: triple.sigma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedySelection {
    /// Position of the chosen candidate in the pool.
    pub index: usize,
    /// The candidate after orthogonalization against the support.
    pub atom: Atom,
    pub gain: f64,
    pub solution: RefitSolution,
}

/// Scores `f(L ∪ {a}) − f(L)` for every pool atom by a warm-started refit and
/// returns the first atom whose gain is at least `tau` times the best gain.
/// Candidates are orthogonalized against `support` first; those left with no
/// new direction score nothing.
pub fn greedy_select(
    obj: &dyn Objective,
    support: &SupportSet,
    current: &RefitSolution,
    pool: &[Atom],
    tau: f64,
    opts: &RefitOptions,
    drop_tol: f64,
) -> Result<GreedySelection> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let scored: Vec<Option<(Atom, RefitSolution)>> = pool
        .par_iter()
        .map(|cand| -> Result<Option<(Atom, RefitSolution)>> {
            let Some(atom) = sequential_orthogonalize(std::slice::from_ref(cand), support, drop_tol)
                .into_iter()
                .next()
            else {
                return Ok(None);
            };
            let sol = refit_warm(&support.with(atom.clone()), obj, opts, Some(current))?;
            Ok(Some((atom, sol)))
        })
        .collect::<Result<_>>()?;

    let gain = |s: &RefitSolution| s.f_value - current.f_value;
    let best = scored
        .iter()
        .flatten()
        .map(|(_, s)| gain(s))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(best > 0.0) {
        return Err(Error::NoImprovement);
    }
    let (index, (atom, solution)) = scored
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .find(|(_, (_, s))| gain(s) >= tau * best)
        .expect("the best candidate passes its own threshold");
    Ok(GreedySelection {
        index,
        gain: gain(&solution),
        atom,
        solution,
    })
}

/// Candidates offered to the greedy loop at each step.
enum Candidates<'a> {
    /// Top singular pair of the gradient plus seeded random atoms.
    Sampled,
    /// A fixed finite pool; each atom may be chosen once.
    Fixed(&'a [Atom]),
}

fn below_early_stop(gain: f64, f: f64) -> bool {
    gain <= EARLY_STOP_GAIN * (1.0 + f.abs())
}

fn greedy_loop(obj: &dyn Objective, cfg: &SolverConfig, candidates: Candidates<'_>) -> Result<Fit> {
    cfg.validate()?;
    let (n, d) = obj.shape();
    let mut support = SupportSet::new();
    let mut solution = refit(&support, obj, &cfg.refit)?;
    let mut history = RunHistory::new();
    let mut used = vec![false; if let Candidates::Fixed(p) = candidates { p.len() } else { 0 }];

    for it in 1..=cfg.k {
        let (pool, sigma, pool_index): (Vec<Atom>, Option<f64>, Vec<usize>) = match candidates {
            Candidates::Sampled => {
                let top = match omp_select(
                    obj,
                    &solution.b,
                    DEFAULT_OMP_TAU,
                    derive_seed(cfg.seed, "greedy-power", it as u64),
                    cfg.power_max_iter,
                ) {
                    Ok(s) => s,
                    Err(Error::Converged) => {
                        history.stop = StopReason::GradientVanished;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                let mut rng = rng_for(cfg.seed, "greedy-pool", it as u64);
                let mut pool = Vec::with_capacity(cfg.pool_size);
                pool.push(top.atom);
                pool.extend((1..cfg.pool_size).map(|_| Atom::random(n, d, &mut rng)));
                let idx = (0..pool.len()).collect();
                (pool, Some(top.sigma), idx)
            }
            Candidates::Fixed(all) => {
                let idx: Vec<usize> = (0..all.len()).filter(|&i| !used[i]).collect();
                if idx.is_empty() {
                    history.stop = StopReason::PoolExhausted;
                    break;
                }
                (idx.iter().map(|&i| all[i].clone()).collect(), None, idx)
            }
        };

        let sel = match greedy_select(obj, &support, &solution, &pool, cfg.tau, &cfg.refit, cfg.drop_tol) {
            Ok(s) => s,
            Err(Error::NoImprovement) => {
                history.stop = StopReason::NoGain;
                break;
            }
            Err(e) => return Err(e),
        };
        if below_early_stop(sel.gain, solution.f_value) {
            history.stop = StopReason::NoGain;
            break;
        }
        if let Candidates::Fixed(_) = candidates {
            used[pool_index[sel.index]] = true;
        }
        support.push(sel.atom.clone());
        history.records.push(IterationRecord {
            iteration: it,
            atom: sel.atom,
            gain: sel.gain,
            f_after: sel.solution.f_value,
            sigma_estimate: sigma,
            refit_converged: sel.solution.converged,
        });
        solution = sel.solution;
    }

    Ok(Fit {
        support,
        solution,
        history,
    })
}

/// Greedy selection with refit scoring over sampled candidate pools.
pub fn run_greedy(obj: &dyn Objective, cfg: &SolverConfig) -> Result<Fit> {
    greedy_loop(obj, cfg, Candidates::Sampled)
}

/// Greedy selection restricted to a fixed atom pool.
pub fn run_greedy_on_pool(obj: &dyn Objective, pool: &[Atom], cfg: &SolverConfig) -> Result<Fit> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    greedy_loop(obj, cfg, Candidates::Fixed(pool))
}

/// Greedy efficient component optimization: the top singular pair of the
/// gradient at each step, followed by a fully-corrective refit.
pub fn run_geco(obj: &dyn Objective, cfg: &SolverConfig) -> Result<Fit> {
    cfg.validate()?;
    let mut support = SupportSet::new();
    let mut solution = refit(&support, obj, &cfg.refit)?;
    let mut history = RunHistory::new();

    for it in 1..=cfg.k {
        let sel = match omp_select(
            obj,
            &solution.b,
            cfg.tau,
            derive_seed(cfg.seed, "geco-power", it as u64),
            cfg.power_max_iter,
        ) {
            Ok(s) => s,
            Err(Error::Converged) => {
                history.stop = StopReason::GradientVanished;
                break;
            }
            Err(e) => return Err(e),
        };
        let Some(atom) = sequential_orthogonalize(&[sel.atom], &support, cfg.drop_tol)
            .into_iter()
            .next()
        else {
            history.stop = StopReason::AtomDependent;
            break;
        };
        let next_support = support.with(atom.clone());
        let next = refit_warm(&next_support, obj, &cfg.refit, Some(&solution))?;
        let gain = next.f_value - solution.f_value;
        if below_early_stop(gain, solution.f_value) {
            history.stop = StopReason::NoGain;
            break;
        }
        history.records.push(IterationRecord {
            iteration: it,
            atom,
            gain,
            f_after: next.f_value,
            sigma_estimate: Some(sel.sigma),
            refit_converged: next.converged,
        });
        support = next_support;
        solution = next;
    }

    Ok(Fit {
        support,
        solution,
        history,
    })
}

/// `count` uniformly random atoms for an `n × d` problem.
pub fn random_pool(n: usize, d: usize, count: usize, seed: u64) -> Vec<Atom> {
    let mut rng = rng_for(seed, "atom-pool", 0);
    (0..count).map(|_| Atom::random(n, d, &mut rng)).collect()
}

/// Splits a pool into `l` parts by dealing atoms round-robin.
pub fn partition_round_robin(pool: &[Atom], l: usize) -> Vec<Vec<Atom>> {
    let l = l.max(1);
    let mut parts = vec![Vec::new(); l];
    for (i, atom) in pool.iter().enumerate() {
        parts[i % l].push(atom.clone());
    }
    parts
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedReport {
    /// `f(G_j)` for each partition.
    pub partition_values: Vec<f64>,
    /// `f(G)` of the greedy run over the union of partition selections.
    pub merged_value: f64,
    /// Whether the merged solution was returned.
    pub merged_chosen: bool,
}

/// Partitioned greedy: greedy on each pool, greedy again on the union of the
/// selected atoms, and the better of that and the best partition solution.
///
/// The merged solution replaces the best partition solution only when it is
/// better by more than rounding (`1e-12` relative), so a single partition
/// reproduces the plain pool greedy exactly.
pub fn run_distributed_greedy(
    obj: &dyn Objective,
    pools: &[Vec<Atom>],
    cfg: &SolverConfig,
) -> Result<(Fit, DistributedReport)> {
    if pools.is_empty() {
        return Err(Error::InvalidInput("at least one partition is required".into()));
    }
    let parts: Vec<Fit> = pools
        .par_iter()
        .map(|pool| run_greedy_on_pool(obj, pool, cfg))
        .collect::<Result<_>>()?;

    let union: Vec<Atom> = parts
        .iter()
        .flat_map(|p| p.support.atoms().iter().cloned())
        .collect();
    let merged = if union.is_empty() {
        None
    } else {
        Some(run_greedy_on_pool(obj, &union, cfg)?)
    };

    let partition_values: Vec<f64> = parts.iter().map(Fit::value).collect();
    let best_idx = partition_values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > partition_values[best] { i } else { best });
    let best_value = partition_values[best_idx];
    let merged_value = merged.as_ref().map_or(0.0, Fit::value);
    let merged_chosen = merged_value > best_value + 1e-12 * (1.0 + best_value.abs());

    let report = DistributedReport {
        partition_values,
        merged_value,
        merged_chosen,
    };
    let fit = match merged {
        Some(m) if merged_chosen => m,
        _ => parts.into_iter().nth(best_idx).expect("index in range"),
    };
    Ok((fit, report))
}
