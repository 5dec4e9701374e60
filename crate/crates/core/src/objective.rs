//! Concave matrix-variate objectives `ℓ: ℝ^{n×d} → ℝ` and their curvature.
//!
//! Four losses are provided: full-observation least squares, Gaussian linear
//! measurements, logistic PCA on a binary matrix, and the binomial (Bernoulli
//! natural-parameter) likelihood on a matrix of probabilities. The two
//! quadratic losses also report strong-concavity / smoothness constants.

use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, DenseMatrix};

/// Smallest Gram eigenvalue accepted as a usable strong-concavity constant.
pub const SINGULAR_DESIGN_TOL: f64 = 1e-12;

/// Lower (`m`) and upper (`M`) curvature constants, `0 < m ≤ M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvaturePair {
    pub m: f64,
    pub big_m: f64,
}

impl CurvaturePair {
    pub fn new(m: f64, big_m: f64) -> Result<Self> {
        if !(m > 0.0 && big_m >= m && big_m.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "curvature pair needs 0 < m <= M, got m={m}, M={big_m}"
            )));
        }
        Ok(CurvaturePair { m, big_m })
    }

    /// Inverse condition number `m / M`.
    pub fn ratio(&self) -> f64 {
        self.m / self.big_m
    }
}

/// A concave objective over `n × d` matrices.
pub trait Objective: Send + Sync {
    fn shape(&self) -> (usize, usize);

    fn value(&self, theta: &DenseMatrix) -> f64;

    fn gradient(&self, theta: &DenseMatrix) -> DenseMatrix;

    fn name(&self) -> &'static str;

    /// Maximizer `H` of `H ↦ ℓ(UᵀHV)` when it has a closed form.
    fn refit_closed_form(&self, _u_rows: &[&[f64]], _v_rows: &[&[f64]]) -> Option<DenseMatrix> {
        None
    }

    /// Full-space curvature constants; `None` for non-quadratic losses.
    fn curvature(&self) -> Option<Result<CurvaturePair>> {
        None
    }

    fn zero_point(&self) -> DenseMatrix {
        let (n, d) = self.shape();
        DenseMatrix::zeros(n, d)
    }
}

/// `log(1 + eˣ)` evaluated without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_shape(theta: &DenseMatrix, shape: (usize, usize)) {
    assert_eq!(
        theta.shape(),
        shape,
        "objective evaluated at a matrix of the wrong shape"
    );
}

/// `ℓ(Θ) = −‖Y − Θ‖²_F`.
#[derive(Debug, Clone)]
pub struct QuadraticFull {
    y: DenseMatrix,
}

impl QuadraticFull {
    pub fn new(y: DenseMatrix) -> Self {
        QuadraticFull { y }
    }

    pub fn target(&self) -> &DenseMatrix {
        &self.y
    }
}

impl Objective for QuadraticFull {
    fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }

    fn value(&self, theta: &DenseMatrix) -> f64 {
        check_shape(theta, self.shape());
        -self.y.sub(theta).frobenius_sq()
    }

    fn gradient(&self, theta: &DenseMatrix) -> DenseMatrix {
        check_shape(theta, self.shape());
        self.y.sub(theta).scale(2.0)
    }

    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn refit_closed_form(&self, u_rows: &[&[f64]], v_rows: &[&[f64]]) -> Option<DenseMatrix> {
        if u_rows.is_empty() {
            return None;
        }
        let yv: Vec<Vec<f64>> = v_rows.iter().map(|v| self.y.matvec(v)).collect();
        Some(DenseMatrix::from_fn(u_rows.len(), v_rows.len(), |a, b| {
            dot(u_rows[a], &yv[b])
        }))
    }

    fn curvature(&self) -> Option<Result<CurvaturePair>> {
        Some(CurvaturePair::new(2.0, 2.0))
    }
}

/// `ℓ(Θ) = −(1/n) Σᵢ (yᵢ − ⟨Xᵢ, Θ⟩)²` for `n` measurement matrices `Xᵢ`.
#[derive(Debug, Clone)]
pub struct LinearMeasurements {
    shape: (usize, usize),
    /// Row `i` holds `vec(Xᵢ)` (row-major).
    design: DenseMatrix,
    y: Vec<f64>,
}

impl LinearMeasurements {
    pub fn new(measurements: &[DenseMatrix], y: Vec<f64>) -> Result<Self> {
        let first = measurements
            .first()
            .ok_or_else(|| Error::InvalidInput("at least one measurement is required".into()))?;
        let shape = first.shape();
        if let Some(bad) = measurements.iter().find(|x| x.shape() != shape) {
            return Err(Error::DimensionMismatch(format!(
                "measurement of shape {:?} in a {:?} design",
                bad.shape(),
                shape
            )));
        }
        let rows: Vec<f64> = measurements
            .iter()
            .flat_map(|x| x.as_slice().iter().copied())
            .collect();
        let design = DenseMatrix::new(measurements.len(), shape.0 * shape.1, rows)?;
        Self::from_design(shape, design, y)
    }

    /// Builds the loss from a design whose row `i` is `vec(Xᵢ)` in row-major
    /// order.
    pub fn from_design(shape: (usize, usize), design: DenseMatrix, y: Vec<f64>) -> Result<Self> {
        if design.cols() != shape.0 * shape.1 {
            return Err(Error::DimensionMismatch(format!(
                "design has {} columns, expected {}",
                design.cols(),
                shape.0 * shape.1
            )));
        }
        if design.rows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} measurements but {} responses",
                design.rows(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite response".into()));
        }
        Ok(LinearMeasurements { shape, design, y })
    }

    pub fn num_samples(&self) -> usize {
        self.y.len()
    }

    pub fn design(&self) -> &DenseMatrix {
        &self.design
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    fn residuals(&self, theta: &DenseMatrix) -> Vec<f64> {
        let fitted = self.design.matvec(theta.as_slice());
        self.y.iter().zip(fitted).map(|(y, f)| y - f).collect()
    }
}

impl Objective for LinearMeasurements {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn value(&self, theta: &DenseMatrix) -> f64 {
        check_shape(theta, self.shape);
        let r = self.residuals(theta);
        -dot(&r, &r) / self.num_samples() as f64
    }

    fn gradient(&self, theta: &DenseMatrix) -> DenseMatrix {
        check_shape(theta, self.shape);
        let r = self.residuals(theta);
        let scale = 2.0 / self.num_samples() as f64;
        let g: Vec<f64> = self.design.tmatvec(&r).into_iter().map(|x| scale * x).collect();
        DenseMatrix::new(self.shape.0, self.shape.1, g).expect("gradient shape")
    }

    fn name(&self) -> &'static str {
        "linear"
    }

    fn curvature(&self) -> Option<Result<CurvaturePair>> {
        Some(gram_curvature(&self.design))
    }
}

/// `(2/n)·λ_min(AᵀA)` and `(2/n)·λ_max(AᵀA)` for a design `A` with `n` rows.
fn gram_curvature(design: &DenseMatrix) -> Result<CurvaturePair> {
    let n = design.rows() as f64;
    let gram = design.transpose().matmul(design)?;
    let (eig, _) = symmetric_eigen(&gram)?;
    let lo = eig[0];
    let hi = *eig.last().expect("nonempty spectrum");
    if lo <= SINGULAR_DESIGN_TOL {
        return Err(Error::SingularDesign(lo));
    }
    CurvaturePair::new(2.0 * lo / n, 2.0 * hi / n)
}

/// Bernoulli natural-parameter log-likelihood
/// `ℓ(Θ) = Σᵢⱼ Pᵢⱼ Θᵢⱼ − log(1 + e^{Θᵢⱼ})` with mean targets `Pᵢⱼ ∈ [0, 1]`.
#[derive(Debug, Clone)]
struct BernoulliLikelihood {
    targets: DenseMatrix,
}

impl BernoulliLikelihood {
    fn value(&self, theta: &DenseMatrix) -> f64 {
        check_shape(theta, self.targets.shape());
        theta
            .as_slice()
            .iter()
            .zip(self.targets.as_slice())
            .map(|(&t, &p)| p * t - softplus(t))
            .sum()
    }

    fn gradient(&self, theta: &DenseMatrix) -> DenseMatrix {
        check_shape(theta, self.targets.shape());
        self.targets.zip_map(theta, |p, t| p - logistic(t))
    }
}

/// Logistic PCA on a binary matrix `X ∈ {0,1}^{n×d}`.
#[derive(Debug, Clone)]
pub struct LogisticPca {
    inner: BernoulliLikelihood,
}

impl LogisticPca {
    pub fn new(x: DenseMatrix) -> Result<Self> {
        if x.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidInput(
                "logistic PCA needs a 0/1 matrix".into(),
            ));
        }
        Ok(LogisticPca {
            inner: BernoulliLikelihood { targets: x },
        })
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.inner.targets
    }
}

impl Objective for LogisticPca {
    fn shape(&self) -> (usize, usize) {
        self.inner.targets.shape()
    }

    fn value(&self, theta: &DenseMatrix) -> f64 {
        self.inner.value(theta)
    }

    fn gradient(&self, theta: &DenseMatrix) -> DenseMatrix {
        self.inner.gradient(theta)
    }

    fn name(&self) -> &'static str {
        "logistic"
    }
}

/// Binomial model on a matrix of normalized counts `P ∈ [0,1]^{n×d}`.
#[derive(Debug, Clone)]
pub struct BinomialCounts {
    inner: BernoulliLikelihood,
}

impl BinomialCounts {
    pub fn new(p: DenseMatrix) -> Result<Self> {
        if p.as_slice().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidInput(
                "binomial targets must lie in [0, 1]".into(),
            ));
        }
        Ok(BinomialCounts {
            inner: BernoulliLikelihood { targets: p },
        })
    }

    /// Normalizes a nonnegative co-occurrence count matrix row by row,
    /// `p(w, c) / p(w)`. All-zero rows stay zero.
    pub fn from_counts(counts: &DenseMatrix) -> Result<Self> {
        if counts.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("counts must be nonnegative".into()));
        }
        let mut p = counts.clone();
        for r in 0..counts.rows() {
            let total: f64 = counts.row(r).iter().sum();
            if total > 0.0 {
                for c in 0..counts.cols() {
                    p[(r, c)] /= total;
                }
            }
        }
        Self::new(p)
    }

    pub fn targets(&self) -> &DenseMatrix {
        &self.inner.targets
    }
}

impl Objective for BinomialCounts {
    fn shape(&self) -> (usize, usize) {
        self.inner.targets.shape()
    }

    fn value(&self, theta: &DenseMatrix) -> f64 {
        self.inner.value(theta)
    }

    fn gradient(&self, theta: &DenseMatrix) -> DenseMatrix {
        self.inner.gradient(theta)
    }

    fn name(&self) -> &'static str {
        "binomial"
    }
}

/// Central-difference gradient check. Returns the largest entrywise
/// `|analytic − numeric| / (1 + |analytic|)`.
pub fn check_gradient(obj: &dyn Objective, theta: &DenseMatrix, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let analytic = obj.gradient(theta);
    let mut probe = theta.clone();
    let mut worst: f64 = 0.0;
    for idx in 0..theta.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + h;
        let up = obj.value(&probe);
        probe.as_mut_slice()[idx] = orig - h;
        let down = obj.value(&probe);
        probe.as_mut_slice()[idx] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic.as_slice()[idx];
        worst = worst.max((a - numeric).abs() / (1.0 + a.abs()));
    }
    Ok(worst)
}

/// Curvature constants of a quadratic loss from its full-space Hessian.
///
/// These full-space eigenvalues bound the restricted constants from the safe
/// side (`m ≤ m_restricted`, `M ≥ M_restricted`).
pub fn quadratic_curvature(obj: &dyn Objective) -> Result<CurvaturePair> {
    obj.curvature().ok_or(Error::NotQuadratic)?
}

/// Restricted strong concavity lower bound for Gaussian designs,
/// `1/32 − 162 (k + r) ln N / n`. Nonpositive values mean the bound is vacuous.
///
/// `big_n` is the ambient dimension `m₁·m₂`; it is taken as a real so the
/// formula can be evaluated at non-integer points.
pub fn gaussian_rsc_bound(n: usize, big_n: f64, k: usize, r: usize) -> f64 {
    1.0 / 32.0 - 162.0 * (k + r) as f64 * big_n.ln() / n as f64
}
