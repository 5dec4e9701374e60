//! Numerical checks of the approximation and recovery guarantees.
//!
//! Each check produces a [`BoundReport`]. A report compares a measured
//! quantity (`lhs`) against a bound (`rhs`) in a documented direction and
//! passes when the bound holds up to `1e-6·(1 + |rhs|)`.

pub mod suites;

use std::fmt::Write as _;

use crate::atoms::{refit, set_value, Atom, RefitOptions, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{project_rowcol, sequential_orthogonalize, top_singular_pair, DenseMatrix};
use crate::objective::{quadratic_curvature, CurvaturePair, Objective};
use crate::solvers::{run_geco, RunHistory, SolverConfig};

/// Relative slack granted to every bound comparison.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Passes when `lhs ≥ rhs`.
    AtLeast,
    /// Passes when `lhs ≤ rhs`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub check: String,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub direction: Direction,
    /// Signed margin in the passing direction.
    pub slack: f64,
    pub holds: bool,
    /// The check could not be evaluated (e.g. no usable curvature).
    pub vacuous: bool,
}

impl BoundReport {
    pub fn new(check: impl Into<String>, seed: u64, lhs: f64, rhs: f64, direction: Direction) -> Self {
        let slack = match direction {
            Direction::AtLeast => lhs - rhs,
            Direction::AtMost => rhs - lhs,
        };
        let holds = slack >= -BOUND_SLACK * (1.0 + rhs.abs());
        BoundReport {
            check: check.into(),
            seed,
            lhs,
            rhs,
            direction,
            slack,
            holds,
            vacuous: false,
        }
    }

    pub fn at_least(check: impl Into<String>, seed: u64, lhs: f64, rhs: f64) -> Self {
        Self::new(check, seed, lhs, rhs, Direction::AtLeast)
    }

    pub fn at_most(check: impl Into<String>, seed: u64, lhs: f64, rhs: f64) -> Self {
        Self::new(check, seed, lhs, rhs, Direction::AtMost)
    }

    pub fn vacuous(check: impl Into<String>, seed: u64) -> Self {
        BoundReport {
            check: check.into(),
            seed,
            lhs: f64::NAN,
            rhs: f64::NAN,
            direction: Direction::AtLeast,
            slack: f64::NAN,
            holds: true,
            vacuous: true,
        }
    }

    /// `true`, `false`, or `vacuous`.
    pub fn status(&self) -> &'static str {
        match (self.vacuous, self.holds) {
            (true, _) => "vacuous",
            (false, true) => "true",
            (false, false) => "false",
        }
    }
}

/// `check,seed,lhs,rhs,slack,holds` with a header row.
pub fn reports_to_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from("check,seed,lhs,rhs,slack,holds\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{:e},{}",
            r.check,
            r.seed,
            r.lhs,
            r.rhs,
            r.slack,
            r.status()
        );
    }
    out
}

/// `γ = Σ_{a∈S}[f(L∪{a}) − f(L)] / (f(L∪S) − f(L))`, with `S` first
/// orthogonalized against `L`.
///
/// Returns [`Error::DenominatorZero`] when the joint gain is not positive.
pub fn submodularity_ratio(
    obj: &dyn Objective,
    l: &SupportSet,
    s: &[Atom],
    opts: &RefitOptions,
    drop_tol: f64,
) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidInput("submodularity ratio needs a nonempty S".into()));
    }
    let s_orth = sequential_orthogonalize(s, l, drop_tol);
    let base = refit(l, obj, opts)?;
    let mut numerator = 0.0;
    for atom in &s_orth {
        numerator += refit(&l.with(atom.clone()), obj, opts)?.f_value - base.f_value;
    }
    let mut joint = l.clone();
    for atom in s_orth {
        joint.push(atom);
    }
    let denominator = refit(&joint, obj, opts)?.f_value - base.f_value;
    if denominator <= 1e-12 {
        return Err(Error::DenominatorZero(denominator));
    }
    Ok(numerator / denominator)
}

/// `1 − exp(−c)` with `c = τ·ratio·k/r`, or `τ²·ratio·k/r` when
/// `squared_tau` is set.
pub fn approx_bound(tau: f64, ratio: f64, k: usize, r: usize, squared_tau: bool) -> f64 {
    let t = if squared_tau { tau * tau } else { tau };
    let c = t * ratio * k as f64 / r as f64;
    -(-c).exp_m1()
}

/// Best rank-`r` value of the full-observation quadratic: the sum of the top
/// `r` squared singular values, with the singular atoms. Computed by repeated
/// power iteration and deflation; stops early once the remainder vanishes.
pub fn svd_truncation_oracle(y: &DenseMatrix, r: usize, seed: u64) -> Result<(f64, Vec<Atom>)> {
    if r > y.rows().min(y.cols()) {
        return Err(Error::InvalidInput(format!(
            "rank {r} exceeds min dimension of a {}x{} matrix",
            y.rows(),
            y.cols()
        )));
    }
    let mut rest = y.clone();
    let mut total = 0.0;
    let mut atoms = Vec::with_capacity(r);
    for i in 0..r {
        let t = match top_singular_pair(&rest, 1e-12, 200_000, seed.wrapping_add(i as u64)) {
            Ok(t) => t,
            Err(Error::ZeroMatrix(_)) => break,
            Err(Error::NonConverged { last, .. }) => *last,
            Err(e) => return Err(e),
        };
        rest.add_outer(-t.sigma, &t.u, &t.v);
        total += t.sigma * t.sigma;
        atoms.push(Atom::from_unit_unchecked(t.u, t.v));
    }
    Ok((total, atoms))
}

/// Best value over all size-`r` subsets of a small atom pool. This is a
/// restricted optimum: a lower bound on the true rank-`r` optimum.
pub fn restricted_optimum(
    obj: &dyn Objective,
    pool: &[Atom],
    r: usize,
    opts: &RefitOptions,
    drop_tol: f64,
) -> Result<f64> {
    if pool.len() > 12 || r > 3 {
        return Err(Error::InvalidInput(
            "brute-force optimum is limited to 12 atoms and r <= 3".into(),
        ));
    }
    let mut best: f64 = 0.0;
    let mut idx: Vec<usize> = (0..r.min(pool.len())).collect();
    if idx.is_empty() {
        return Ok(0.0);
    }
    loop {
        let chosen: Vec<Atom> = idx.iter().map(|&i| pool[i].clone()).collect();
        let support = SupportSet::from_atoms(sequential_orthogonalize(
            &chosen,
            &SupportSet::new(),
            drop_tol,
        ));
        best = best.max(set_value(&support, obj, opts)?);
        // next combination in lexicographic order
        let m = idx.len();
        let Some(pos) = (0..m).rev().find(|&p| idx[p] < pool.len() - m + p) else {
            break;
        };
        idx[pos] += 1;
        for q in pos + 1..m {
            idx[q] = idx[q - 1] + 1;
        }
    }
    Ok(best)
}

/// Runs GECO for `cfg.k` steps and checks
/// `f(S_k) ≥ (1 − e^{−τ²(m/M)k/r})·f(S*_r)` against the supplied optimum.
///
/// Propagates [`Error::SingularDesign`] / [`Error::NotQuadratic`] when no
/// curvature constants are available.
pub fn check_geco_guarantee(
    obj: &dyn Objective,
    cfg: &SolverConfig,
    r: usize,
    oracle_opt: f64,
) -> Result<BoundReport> {
    let curvature = quadratic_curvature(obj)?;
    let fit = run_geco(obj, cfg)?;
    let bound = approx_bound(cfg.tau, curvature.ratio(), cfg.k, r, true);
    Ok(BoundReport::at_least(
        format!("geco_ratio_k{}_r{}", cfg.k, r),
        cfg.seed,
        fit.value(),
        bound * oracle_opt,
    ))
}

/// Spectral norm by power iteration; the last iterate on non-convergence is
/// a lower estimate.
pub fn spectral_norm(g: &DenseMatrix, seed: u64) -> Result<f64> {
    match top_singular_pair(g, 1e-10, 100_000, seed) {
        Ok(t) => Ok(t.sigma),
        Err(Error::ZeroMatrix(_)) => Ok(0.0),
        Err(Error::NonConverged { last, .. }) => Ok(last.sigma),
        Err(e) => Err(e),
    }
}

/// Recovery bound
/// `‖B_k − B_r‖²_F ≤ 4(k+r)‖∇ℓ(B_r)‖²₂/m² + 4(1−C)/m·[ℓ(B_r) − ℓ(0)]`.
#[allow(clippy::too_many_arguments)]
pub fn check_recovery_bound(
    obj: &dyn Objective,
    b_k: &DenseMatrix,
    b_r: &DenseMatrix,
    m: f64,
    c: f64,
    k: usize,
    r: usize,
    seed: u64,
) -> Result<BoundReport> {
    if !(m > 0.0) {
        return Err(Error::InvalidInput(format!("curvature m must be positive, got {m}")));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidInput(format!("approximation ratio must lie in [0, 1], got {c}")));
    }
    let lhs = b_k.sub(b_r).frobenius_sq();
    let grad_norm = spectral_norm(&obj.gradient(b_r), seed)?;
    let gain = obj.value(b_r) - obj.value(&obj.zero_point());
    let rhs = 4.0 * (k + r) as f64 * grad_norm * grad_norm / (m * m) + 4.0 * (1.0 - c) / m * gain;
    Ok(BoundReport::at_most("recovery", seed, lhs, rhs))
}

/// The sandwich `g/(2M) ≤ f(S) ≤ g/(2m)` with
/// `g = ‖P_{U_S} ∇ℓ(0) P_{V_S}‖²_F`. Returns (lower, upper) reports.
pub fn check_subadditivity_lemmas(
    obj: &dyn Objective,
    s: &SupportSet,
    curvature: &CurvaturePair,
    opts: &RefitOptions,
    seed: u64,
) -> Result<(BoundReport, BoundReport)> {
    let grad0 = obj.gradient(&obj.zero_point());
    let g = project_rowcol(&grad0, &s.u_rows(), &s.v_rows())?.frobenius_sq();
    let f = set_value(s, obj, opts)?;
    Ok((
        BoundReport::at_least("sandwich_lower", seed, f, g / (2.0 * curvature.big_m)),
        BoundReport::at_most("sandwich_upper", seed, f, g / (2.0 * curvature.m)),
    ))
}

/// Per-step checks `gain(i+1) ≥ coef·B(i)` for `i = 0..len`, with
/// `B(i) = f(S*) − f(S_i)`. When the run stopped early, one more step is
/// checked with zero gain.
fn per_step_checks(name: &str, seed: u64, history: &RunHistory, f_opt: f64, coef: f64) -> Vec<BoundReport> {
    let f = history.f_values();
    let mut gains = history.gains();
    if history.stop.is_converged() {
        gains.push(0.0);
    }
    gains
        .iter()
        .enumerate()
        .map(|(i, &g)| BoundReport::at_least(format!("{name}_step{}", i + 1), seed, g, coef * (f_opt - f[i])))
        .collect()
}

/// Greedy per-step progress `A(i+1) ≥ (τγ/r)·B(i)`.
pub fn check_greedy_steps(
    history: &RunHistory,
    f_opt: f64,
    tau: f64,
    gamma: f64,
    r: usize,
    seed: u64,
) -> Vec<BoundReport> {
    per_step_checks("greedy_lemma", seed, history, f_opt, tau * gamma / r as f64)
}

/// GECO per-step progress `D(i+1) ≥ (τ² m / (r M))·B(i)`.
pub fn check_geco_steps(
    history: &RunHistory,
    f_opt: f64,
    tau: f64,
    curvature: &CurvaturePair,
    r: usize,
    seed: u64,
) -> Vec<BoundReport> {
    per_step_checks(
        "geco_lemma",
        seed,
        history,
        f_opt,
        tau * tau * curvature.ratio() / r as f64,
    )
}

/// `ℓ((a+b)/2) − (ℓ(a) + ℓ(b))/2`; nonnegative for a concave `ℓ`.
pub fn midpoint_concavity_gap(obj: &dyn Objective, a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let mid = a.add(b).scale(0.5);
    obj.value(&mid) - 0.5 * (obj.value(a) + obj.value(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::QuadraticFull;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn bound_at_k_equals_r_is_one_minus_inverse_e() {
        let b = approx_bound(1.0, 1.0, 5, 5, false);
        assert!((b - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((b - 0.632121).abs() < 1e-6);
        assert!((approx_bound(1.0, 0.5, 10, 5, true) - b).abs() < 1e-15);
        assert!(approx_bound(1.0, 1.0, 1000, 1, false) > 1.0 - 1e-12);
        assert_eq!(approx_bound(1.0, 1.0, 0, 3, true), 0.0);
    }

    #[test]
    fn svd_oracle_on_diagonal() {
        let y = DenseMatrix::diag(&[3.0, 2.0, 1.0]);
        let (f, atoms) = svd_truncation_oracle(&y, 2, 0).unwrap();
        assert!((f - 13.0).abs() < 1e-12);
        assert_eq!(atoms.len(), 2);
        assert_eq!(svd_truncation_oracle(&y, 0, 0).unwrap().0, 0.0);
        assert!(svd_truncation_oracle(&y, 4, 0).is_err());
    }

    #[test]
    fn single_atom_ratio_is_one() {
        let y = DenseMatrix::from_fn(3, 3, |r, c| (r as f64 + 1.0) * (c as f64 - 1.0) + 0.3);
        let obj = QuadraticFull::new(y);
        let s = vec![Atom::normalized(vec![1.0, 2.0, 0.5], vec![0.3, -1.0, 2.0]).unwrap()];
        let g = submodularity_ratio(&obj, &SupportSet::new(), &s, &RefitOptions::default(), 1e-8).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn ratio_undefined_without_joint_gain() {
        let obj = QuadraticFull::new(DenseMatrix::outer(&e(2, 0), &e(2, 0)));
        let s = vec![Atom::new(e(2, 1), e(2, 1)).unwrap()];
        assert!(matches!(
            submodularity_ratio(&obj, &SupportSet::new(), &s, &RefitOptions::default(), 1e-8),
            Err(Error::DenominatorZero(_))
        ));
    }

    #[test]
    fn cross_term_gain_is_invisible_to_singletons() {
        // Y = e₁e₂ᵀ: neither diagonal atom gains alone, together they span e₁e₂ᵀ.
        let obj = QuadraticFull::new(DenseMatrix::outer(&e(2, 0), &e(2, 1)));
        let s = vec![Atom::new(e(2, 0), e(2, 0)).unwrap(), Atom::new(e(2, 1), e(2, 1)).unwrap()];
        let g = submodularity_ratio(&obj, &SupportSet::new(), &s, &RefitOptions::default(), 1e-8).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn recovery_bound_trivial_cases() {
        let y = DenseMatrix::diag(&[2.0, 1.0]);
        let obj = QuadraticFull::new(y.clone());
        let rep = check_recovery_bound(&obj, &y, &y, 2.0, 1.0, 2, 2, 0).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
        assert!(rep.holds);
        let off = y.add(&DenseMatrix::diag(&[0.0, 1e-2]));
        assert!(!check_recovery_bound(&obj, &off, &y, 2.0, 1.0, 2, 2, 0).unwrap().holds);
        assert!(check_recovery_bound(&obj, &y, &y, 0.0, 1.0, 2, 2, 0).is_err());
    }

    #[test]
    fn sandwich_collapses_on_quadratic_full() {
        let y = DenseMatrix::from_fn(3, 2, |r, c| (r * 2 + c) as f64 - 2.5);
        let obj = QuadraticFull::new(y);
        let s = SupportSet::from_atoms(vec![Atom::normalized(vec![1.0, 1.0, 0.0], vec![1.0, -1.0]).unwrap()]);
        let curv = quadratic_curvature(&obj).unwrap();
        let (lo, hi) = check_subadditivity_lemmas(&obj, &s, &curv, &RefitOptions::default(), 0).unwrap();
        assert!((lo.lhs - lo.rhs).abs() < 1e-12 && (hi.lhs - hi.rhs).abs() < 1e-12);
        let (lo, hi) = check_subadditivity_lemmas(&obj, &SupportSet::new(), &curv, &RefitOptions::default(), 0).unwrap();
        assert_eq!((lo.lhs, lo.rhs, hi.rhs), (0.0, 0.0, 0.0));
    }

    #[test]
    fn report_direction_and_csv() {
        let r = BoundReport::at_most("x", 3, 1.0, 0.5);
        assert!(!r.holds);
        assert_eq!(r.slack, -0.5);
        let ok = BoundReport::at_least("y", 4, 1.0, 1.0 + 1e-7);
        assert!(ok.holds);
        let csv = reports_to_csv(&[r, ok, BoundReport::vacuous("z", 5)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "check,seed,lhs,rhs,slack,holds");
        assert!(lines[1].ends_with(",false"));
        assert!(lines[3].ends_with(",vacuous"));
    }

    #[test]
    fn restricted_optimum_enumerates_subsets() {
        let obj = QuadraticFull::new(DenseMatrix::diag(&[3.0, 2.0, 1.0]));
        let pool: Vec<Atom> = (0..3).map(|i| Atom::new(e(3, i), e(3, i)).unwrap()).collect();
        let best = restricted_optimum(&obj, &pool, 2, &RefitOptions::default(), 1e-8).unwrap();
        assert!((best - 13.0).abs() < 1e-12);
    }
}
