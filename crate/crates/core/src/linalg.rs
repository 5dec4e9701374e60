//! Dense matrix primitives: a row-major real matrix, the top singular pair by
//! alternating power iteration, row/column-space projections, and sequential
//! Gram–Schmidt of atoms against a support set.

use std::fmt;
use std::ops::{Index, IndexMut};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::atoms::{Atom, SupportSet};
use crate::error::{Error, Result};

/// Frobenius norm below which a matrix is treated as zero.
pub const ZERO_MATRIX_TOL: f64 = 1e-14;

/// Default residual norm below which an atom is considered dependent.
pub const DEFAULT_DROP_TOL: f64 = 1e-8;

/// Row-major dense real matrix with at least one row and one column.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &x) in values.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), ncols, rows.concat())
    }

    /// Rank-1 matrix `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c])
    }

    /// Matrix with i.i.d. standard normal entries drawn from `rng`.
    pub fn random_normal(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Self {
        Self::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `Aᵀ y`.
    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += yr * a;
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let orow = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// Trace inner product `⟨A, B⟩`.
    pub fn inner(&self, other: &DenseMatrix) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        dot(&self.data, &other.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in zip_map");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|x| alpha * x)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in axpy");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// `self += alpha * u vᵀ`.
    pub fn add_outer(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        debug_assert_eq!((u.len(), v.len()), self.shape());
        for (r, &ur) in u.iter().enumerate() {
            let s = alpha * ur;
            if s == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (a, &vc) in row.iter_mut().zip(v) {
                *a += s * vc;
            }
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|r| (0..r).all(|c| (self[(r, c)] - self[(c, r)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales `a` to unit length in place and returns its former norm. Leaves a
/// zero vector untouched.
pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm2(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Uniform sample from the unit sphere in `dim` dimensions.
pub fn random_unit_vector(dim: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if normalize(&mut v) > 1e-300 {
            return v;
        }
    }
}

/// Largest singular value and its singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriple {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Alternating power iteration for the top singular pair of `g`.
///
/// Starts from a seeded uniform direction on the unit sphere and iterates
/// `u ← Gv/‖Gv‖`, `v ← Gᵀu/‖Gᵀu‖`. Stops once the σ estimate changes by less
/// than `tol·σ` over one sweep and `‖Gv − σu‖ ≤ tol·σ`.
pub fn top_singular_pair(
    g: &DenseMatrix,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SingularTriple> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol must be positive, got {tol}")));
    }
    let fro = g.frobenius_norm();
    if fro < ZERO_MATRIX_TOL {
        return Err(Error::ZeroMatrix(fro));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut u, mut sigma) = loop {
        let v0 = random_unit_vector(g.cols(), &mut rng);
        let mut gv = g.matvec(&v0);
        let s = normalize(&mut gv);
        if s > 0.0 {
            break (gv, s);
        }
    };
    let mut v = vec![0.0; g.cols()];

    for _ in 0..max_iter {
        let mut w = g.tmatvec(&u);
        let sigma_t = normalize(&mut w);
        v = w;

        let gv = g.matvec(&v);
        let residual = gv
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - sigma_t * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let mut next_u = gv;
        let s = normalize(&mut next_u);
        let change = (s - sigma).abs();
        u = next_u;
        sigma = s;
        if change <= tol * s && residual <= tol * sigma_t {
            return Ok(SingularTriple { sigma, u, v });
        }
    }
    Err(Error::NonConverged {
        iters: max_iter,
        last: Box::new(SingularTriple { sigma, u, v }),
    })
}

/// Projects `g` onto `span(U) ⊗ span(V)`: returns `UᵀU G VᵀV` where the rows
/// of `U` (resp. `V`) are the supplied orthonormal vectors.
pub fn project_rowcol<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    g: &DenseMatrix,
    u_rows: &[A],
    v_rows: &[B],
) -> Result<DenseMatrix> {
    if let Some(bad) = u_rows.iter().find(|u| u.as_ref().len() != g.rows()) {
        return Err(Error::DimensionMismatch(format!(
            "row-space vector has length {}, matrix has {} rows",
            bad.as_ref().len(),
            g.rows()
        )));
    }
    if let Some(bad) = v_rows.iter().find(|v| v.as_ref().len() != g.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "column-space vector has length {}, matrix has {} columns",
            bad.as_ref().len(),
            g.cols()
        )));
    }
    let gv: Vec<Vec<f64>> = v_rows.iter().map(|v| g.matvec(v.as_ref())).collect();
    let mut out = DenseMatrix::zeros(g.rows(), g.cols());
    for u in u_rows {
        let u = u.as_ref();
        for (v, gv_b) in v_rows.iter().zip(&gv) {
            let coef = dot(u, gv_b);
            out.add_outer(coef, u, v.as_ref());
        }
    }
    Ok(out)
}

/// Removes from `x` its components along each (orthonormal) vector in
/// `basis`. Two passes of classical Gram–Schmidt.
fn orthogonalize_against(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
        }
    }
}

/// Gram–Schmidt of the atoms in `s`, u-components and v-components
/// independently, against the support `l` and against previously accepted
/// atoms. Atoms whose residual u- or v-norm drops below `drop_tol` are
/// discarded.
pub fn sequential_orthogonalize(s: &[Atom], l: &SupportSet, drop_tol: f64) -> Vec<Atom> {
    let mut u_basis: Vec<Vec<f64>> = l.atoms().iter().map(|a| a.u().to_vec()).collect();
    let mut v_basis: Vec<Vec<f64>> = l.atoms().iter().map(|a| a.v().to_vec()).collect();
    let mut out = Vec::with_capacity(s.len());
    for atom in s {
        let mut u = atom.u().to_vec();
        let mut v = atom.v().to_vec();
        orthogonalize_against(&mut u, &u_basis);
        orthogonalize_against(&mut v, &v_basis);
        let (nu, nv) = (norm2(&u), norm2(&v));
        if nu < drop_tol || nv < drop_tol {
            continue;
        }
        u.iter_mut().for_each(|x| *x /= nu);
        v.iter_mut().for_each(|x| *x /= nv);
        u_basis.push(u.clone());
        v_basis.push(v.clone());
        out.push(Atom::from_unit_unchecked(u, v));
    }
    out
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order with matching eigenvectors as
/// columns of the returned matrix.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut m = a.clone();
    let mut q = DenseMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = m[(p, r)];
                if apr.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(r, r)] - m[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkr = m[(k, r)];
                    m[(k, p)] = c * mkp - s * mkr;
                    m[(k, r)] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mrk = m[(r, k)];
                    m[(p, k)] = c * mpk - s * mrk;
                    m[(r, k)] = s * mpk + c * mrk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| q[(r, order[c])]);
    Ok((values, vectors))
}
