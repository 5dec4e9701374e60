//! Rank-1 atoms, support sets, and the fully-corrective refit that defines
//! the set function `f(L) = max_H ℓ(U_Lᵀ H V_L) − ℓ(0)`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix};
use crate::objective::Objective;

const UNIT_TOL: f64 = 1e-10;

/// A rank-1 direction `u vᵀ` with unit-norm factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl Atom {
    /// Both factors must already have unit norm.
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        for (name, x) in [("u", &u), ("v", &v)] {
            if x.is_empty() {
                return Err(Error::InvalidInput(format!("atom {name} is empty")));
            }
            let n = norm2(x);
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidInput(format!(
                    "atom {name} has norm {n}, expected 1"
                )));
            }
        }
        Ok(Atom { u, v })
    }

    /// Scales both factors to unit length.
    pub fn normalized(mut u: Vec<f64>, mut v: Vec<f64>) -> Result<Self> {
        for (name, x) in [("u", &mut u), ("v", &mut v)] {
            let n = norm2(x);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "atom {name} cannot be normalized (norm {n})"
                )));
            }
            x.iter_mut().for_each(|e| *e /= n);
        }
        Ok(Atom { u, v })
    }

    pub(crate) fn from_unit_unchecked(u: Vec<f64>, v: Vec<f64>) -> Self {
        debug_assert!((norm2(&u) - 1.0).abs() <= 1e-8 && (norm2(&v) - 1.0).abs() <= 1e-8);
        Atom { u, v }
    }

    /// Uniformly random unit factors.
    pub fn random(n: usize, d: usize, rng: &mut impl rand::Rng) -> Self {
        Atom {
            u: crate::linalg::random_unit_vector(n, rng),
            v: crate::linalg::random_unit_vector(d, rng),
        }
    }

    #[inline]
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    #[inline]
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.u.len(), self.v.len())
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::outer(&self.u, &self.v)
    }
}

/// Ordered collection of atoms. Solvers keep the u-factors mutually
/// orthonormal, and likewise the v-factors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SupportSet {
    atoms: Vec<Atom>,
}

impl SupportSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        SupportSet { atoms }
    }

    pub fn push(&mut self, atom: Atom) {
        self.atoms.push(atom);
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<Atom> {
        self.atoms
    }

    pub fn u_rows(&self) -> Vec<&[f64]> {
        self.atoms.iter().map(Atom::u).collect()
    }

    pub fn v_rows(&self) -> Vec<&[f64]> {
        self.atoms.iter().map(Atom::v).collect()
    }

    /// Support extended by one atom.
    pub fn with(&self, atom: Atom) -> SupportSet {
        let mut atoms = self.atoms.clone();
        atoms.push(atom);
        SupportSet { atoms }
    }

    /// Largest `|⟨uᵢ, uⱼ⟩|` or `|⟨vᵢ, vⱼ⟩|` over distinct pairs.
    pub fn max_cross_inner(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[..i] {
                worst = worst.max(dot(a.u(), b.u()).abs()).max(dot(a.v(), b.v()).abs());
            }
        }
        worst
    }

    /// One atom per line: u entries, a `|`, then v entries.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for atom in &self.atoms {
            let join = |xs: &[f64]| {
                xs.iter()
                    .map(|x| format!("{x:e}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(out, "{} | {}", join(atom.u()), join(atom.v()));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut dims = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let (left, right) = line
                .split_once('|')
                .ok_or_else(|| parse_err("missing '|' separator".into()))?;
            let parse = |s: &str| -> Result<Vec<f64>> {
                s.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| parse_err(format!("bad number {t:?}: {e}")))
                    })
                    .collect()
            };
            let atom = Atom::new(parse(left)?, parse(right)?)
                .map_err(|e| parse_err(e.to_string()))?;
            match dims {
                None => dims = Some(atom.dims()),
                Some(d) if d != atom.dims() => {
                    return Err(parse_err(format!(
                        "atom dims {:?} differ from earlier {:?}",
                        atom.dims(),
                        d
                    )))
                }
                _ => {}
            }
            atoms.push(atom);
        }
        Ok(SupportSet { atoms })
    }
}

/// Inner-solver settings for [`refit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefitOptions {
    /// Relative first-order tolerance: stop once `‖∇_H‖_F ≤ tol·(1 + |f|)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RefitOptions {
    fn default() -> Self {
        RefitOptions {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Optimal coefficients on a support and the matrix they reconstruct.
#[derive(Debug, Clone, PartialEq)]
pub struct RefitSolution {
    /// `|L| × |L|` coefficients, row-major.
    pub h: Vec<f64>,
    pub size: usize,
    /// `B = U_Lᵀ H V_L`.
    pub b: DenseMatrix,
    /// `ℓ(B) − ℓ(0)`.
    pub f_value: f64,
    pub inner_iters: usize,
    /// False when `max_iter` ran out before the first-order test passed; the
    /// best iterate is still returned.
    pub converged: bool,
}

impl RefitSolution {
    fn empty(shape: (usize, usize)) -> Self {
        RefitSolution {
            h: Vec::new(),
            size: 0,
            b: DenseMatrix::zeros(shape.0, shape.1),
            f_value: 0.0,
            inner_iters: 0,
            converged: true,
        }
    }

    pub fn h_matrix(&self) -> Option<DenseMatrix> {
        (self.size > 0).then(|| {
            DenseMatrix::new(self.size, self.size, self.h.clone()).expect("square coefficients")
        })
    }
}

fn check_support(support: &SupportSet, shape: (usize, usize)) -> Result<()> {
    match support.atoms().iter().find(|a| a.dims() != shape) {
        Some(a) => Err(Error::DimensionMismatch(format!(
            "atom of dims {:?} for a {:?} objective",
            a.dims(),
            shape
        ))),
        None => Ok(()),
    }
}

/// Reconstructs `B = Σ_ab H_ab u_a v_bᵀ`.
fn reconstruct(u_rows: &[&[f64]], v_rows: &[&[f64]], h: &[f64], shape: (usize, usize)) -> DenseMatrix {
    let k = u_rows.len();
    let mut b = DenseMatrix::zeros(shape.0, shape.1);
    let mut w = vec![0.0; shape.1];
    for a in 0..k {
        w.iter_mut().for_each(|x| *x = 0.0);
        for (bi, v) in v_rows.iter().enumerate() {
            let coef = h[a * k + bi];
            if coef != 0.0 {
                w.iter_mut().zip(v.iter()).for_each(|(x, &vv)| *x += coef * vv);
            }
        }
        b.add_outer(1.0, u_rows[a], &w);
    }
    b
}

/// `∇_H = U_L ∇ℓ(B) V_Lᵀ`.
fn coefficient_gradient(u_rows: &[&[f64]], v_rows: &[&[f64]], grad: &DenseMatrix) -> Vec<f64> {
    let gv: Vec<Vec<f64>> = v_rows.iter().map(|v| grad.matvec(v)).collect();
    let k = u_rows.len();
    let mut out = vec![0.0; k * k];
    for (a, u) in u_rows.iter().enumerate() {
        for (bi, gvb) in gv.iter().enumerate() {
            out[a * k + bi] = dot(u, gvb);
        }
    }
    out
}

/// Fully-corrective refit of the coefficients on `support`.
pub fn refit(support: &SupportSet, obj: &dyn Objective, opts: &RefitOptions) -> Result<RefitSolution> {
    refit_warm(support, obj, opts, None)
}

/// [`refit`] started from a previous solution's coefficients. A smaller warm
/// start is padded with zero rows and columns.
pub fn refit_warm(
    support: &SupportSet,
    obj: &dyn Objective,
    opts: &RefitOptions,
    warm: Option<&RefitSolution>,
) -> Result<RefitSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "refit tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let shape = obj.shape();
    check_support(support, shape)?;
    if support.is_empty() {
        return Ok(RefitSolution::empty(shape));
    }
    let k = support.len();
    let u_rows = support.u_rows();
    let v_rows = support.v_rows();
    let base = obj.value(&obj.zero_point());

    if let Some(h) = obj.refit_closed_form(&u_rows, &v_rows) {
        let h = h.into_vec();
        let b = reconstruct(&u_rows, &v_rows, &h, shape);
        let f_value = obj.value(&b) - base;
        return Ok(RefitSolution {
            h,
            size: k,
            b,
            f_value,
            inner_iters: 0,
            converged: true,
        });
    }

    let mut h = vec![0.0; k * k];
    if let Some(w) = warm.filter(|w| w.size <= k) {
        for a in 0..w.size {
            for bi in 0..w.size {
                h[a * k + bi] = w.h[a * w.size + bi];
            }
        }
    }

    let mut b = reconstruct(&u_rows, &v_rows, &h, shape);
    let mut value = obj.value(&b);
    let mut grad = coefficient_gradient(&u_rows, &v_rows, &obj.gradient(&b));
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut step = 1.0;
    let mut converged = false;
    let mut iters = 0;

    while iters < opts.max_iter {
        let gnorm2 = dot(&grad, &grad);
        if gnorm2.sqrt() <= opts.tol * (1.0 + (value - base).abs()) {
            converged = true;
            break;
        }
        iters += 1;

        // Barzilai–Borwein initial step for ascent: sᵀs / (−sᵀy).
        if let Some((h_prev, g_prev)) = &prev {
            let s: Vec<f64> = h.iter().zip(h_prev).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = grad.iter().zip(g_prev).map(|(a, b)| a - b).collect();
            let sy = -dot(&s, &y);
            let ss = dot(&s, &s);
            if sy > 0.0 && ss > 0.0 {
                step = ss / sy;
            } else {
                step *= 2.0;
            }
        }

        // Armijo backtracking by halving. Increases below the rounding level of
        // ℓ are not resolvable, so the test tolerates that much noise.
        let noise = 8.0 * f64::EPSILON * value.abs().max(1.0);
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = h.iter().zip(&grad).map(|(x, g)| x + step * g).collect();
            let b_trial = reconstruct(&u_rows, &v_rows, &trial, shape);
            let v_trial = obj.value(&b_trial);
            if v_trial.is_finite() && v_trial >= value + 1e-4 * step * gnorm2 - noise {
                accepted = Some((trial, b_trial, v_trial));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, b_trial, v_trial)) = accepted else {
            break;
        };
        let g_trial = coefficient_gradient(&u_rows, &v_rows, &obj.gradient(&b_trial));
        prev = Some((std::mem::replace(&mut h, trial), std::mem::replace(&mut grad, g_trial)));
        b = b_trial;
        value = v_trial;
    }

    if !converged {
        let gnorm = dot(&grad, &grad).sqrt();
        converged = gnorm <= opts.tol * (1.0 + (value - base).abs());
        if !converged {
            log::debug!(
                "refit on {k} atoms stopped after {iters} iterations with gradient norm {gnorm:e}"
            );
        }
    }

    Ok(RefitSolution {
        h,
        size: k,
        b,
        f_value: value - base,
        inner_iters: iters,
        converged,
    })
}

/// `f(L)`: the refit objective gain over `ℓ(0)`.
pub fn set_value(support: &SupportSet, obj: &dyn Objective, opts: &RefitOptions) -> Result<f64> {
    Ok(refit(support, obj, opts)?.f_value)
}
