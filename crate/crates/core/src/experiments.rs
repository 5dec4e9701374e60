//! Data generation and baselines for two studies: stochastic-block-model
//! clustering with logistic PCA, and low-rank recovery from Gaussian linear
//! measurements.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::analysis::{approx_bound, check_recovery_bound, BoundReport};
use crate::error::{Error, Result};
use crate::linalg::{dot, random_unit_vector, symmetric_eigen, DenseMatrix};
use crate::objective::{
    gaussian_rsc_bound, logistic, quadratic_curvature, CurvaturePair, LinearMeasurements,
    LogisticPca,
};
use crate::seed::{derive_seed, rng_for};
use crate::solvers::{run_geco, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SbmConfig {
    pub n: usize,
    pub k_true: usize,
    /// Within-cluster edge probability; across-cluster edges use `1 − p`.
    pub p: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmSample {
    pub adjacency: DenseMatrix,
    pub p_true: DenseMatrix,
    pub labels: Vec<usize>,
}

/// Balanced contiguous assignment of `n` nodes to `k` clusters.
pub fn balanced_labels(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| i * k / n).collect()
}

/// Symmetric 0/1 adjacency with zero diagonal. The diagonal of `p_true` is
/// set to `p`.
pub fn sbm_generate(cfg: &SbmConfig) -> Result<SbmSample> {
    if cfg.n == 0 || cfg.k_true == 0 || cfg.k_true > cfg.n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k_true <= n, got n={}, k_true={}",
            cfg.n, cfg.k_true
        )));
    }
    if !(cfg.p > 0.0 && cfg.p <= 1.0) {
        return Err(Error::InvalidInput(format!("p must lie in (0, 1], got {}", cfg.p)));
    }
    let labels = balanced_labels(cfg.n, cfg.k_true);
    let q = 1.0 - cfg.p;
    let mut rng = rng_for(cfg.seed, "sbm", 0);
    let mut a = DenseMatrix::zeros(cfg.n, cfg.n);
    let p_true = DenseMatrix::from_fn(cfg.n, cfg.n, |i, j| {
        if labels[i] == labels[j] {
            cfg.p
        } else {
            q
        }
    });
    for i in 0..cfg.n {
        for j in (i + 1)..cfg.n {
            let draw: f64 = rng.random();
            if draw < p_true[(i, j)] {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    Ok(SbmSample {
        adjacency: a,
        p_true,
        labels,
    })
}

/// Unnormalized `L = D − A`, or normalized `I − D^{-1/2} A D^{-1/2}` with the
/// rows and columns of isolated nodes left at zero.
pub fn laplacian(a: &DenseMatrix, normalized: bool) -> DenseMatrix {
    let n = a.rows();
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
    if !normalized {
        return DenseMatrix::from_fn(n, n, |i, j| if i == j { deg[i] - a[(i, j)] } else { -a[(i, j)] });
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    DenseMatrix::from_fn(n, n, |i, j| {
        if deg[i] == 0.0 || deg[j] == 0.0 {
            0.0
        } else {
            let off = a[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            if i == j {
                1.0 - off
            } else {
                -off
            }
        }
    })
}

/// Rows of the `k` eigenvectors of the Laplacian with smallest eigenvalues.
pub fn spectral_embedding(a: &DenseMatrix, k: usize, normalized: bool) -> Result<Vec<Vec<f64>>> {
    if !a.is_symmetric(0.0) {
        return Err(Error::InvalidInput("adjacency must be symmetric".into()));
    }
    let n = a.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let (_, vectors) = symmetric_eigen(&laplacian(a, normalized))?;
    Ok((0..n).map(|i| (0..k).map(|c| vectors[(i, c)]).collect()).collect())
}

/// Spectral clustering: bottom-`k` Laplacian eigenvectors, then k-means on
/// their rows.
pub fn spectral_clustering(a: &DenseMatrix, k: usize, normalized: bool, seed: u64) -> Result<Vec<usize>> {
    let points = spectral_embedding(a, k, normalized)?;
    Ok(kmeans(&points, k, seed, 10)?.labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn inertia_of(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &[usize]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum()
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // all remaining points coincide with a center
            rng.random_range(0..points.len())
        };
        centers.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansResult {
    let k = centers.len();
    let dim = points[0].len();
    let assign = |centers: &[Vec<f64>]| -> Vec<usize> {
        points
            .iter()
            .map(|p| {
                (0..k)
                    .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                    .expect("k >= 1")
            })
            .collect()
    };
    let mut labels = assign(&centers);
    let mut inertia = inertia_of(points, &centers, &labels);
    for _ in 0..1000 {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // reseed an empty cluster at the point farthest from its center
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                    })
                    .expect("points nonempty");
                centers[c] = points[far].clone();
                labels[far] = c;
            }
        }
        labels = assign(&centers);
        let next = inertia_of(points, &centers, &labels);
        let change = (inertia - next).abs();
        inertia = next;
        if change <= 1e-8 * inertia.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    KMeansResult {
        labels,
        centers,
        inertia,
    }
}

/// k-means++ seeding followed by Lloyd iterations, best of `restarts` runs.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= #points, got k={k} for {} points",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("points of different dimension".into()));
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = rng_for(seed, "kmeans", restart as u64);
        let run = lloyd(points, plus_plus_init(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Block-constant estimate: entry `(i, j)` is the mean adjacency over
/// off-diagonal pairs in the blocks of `i` and `j` under `labels`.
pub fn block_mean_estimate(a: &DenseMatrix, labels: &[usize]) -> Result<DenseMatrix> {
    let n = a.rows();
    if labels.len() != n || a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for a {}x{} adjacency",
            labels.len(),
            n,
            a.cols()
        )));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; k * k];
    let mut counts = vec![0.0; k * k];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sums[labels[i] * k + labels[j]] += a[(i, j)];
                counts[labels[i] * k + labels[j]] += 1.0;
            }
        }
    }
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        let b = labels[i] * k + labels[j];
        if counts[b] > 0.0 {
            sums[b] / counts[b]
        } else {
            0.0
        }
    }))
}

/// Which entries the error averages cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMask {
    All,
    /// Skip the diagonal (self-loops are not part of a graph model).
    OffDiagonal,
}

/// Mean squared errors of a probability estimate against the true
/// probabilities (generalization) and the observed matrix (reconstruction).
pub fn probability_errors(
    prob_hat: &DenseMatrix,
    p_true: &DenseMatrix,
    observed: &DenseMatrix,
    mask: ErrorMask,
) -> Result<(f64, f64)> {
    if prob_hat.shape() != p_true.shape() || prob_hat.shape() != observed.shape() {
        return Err(Error::DimensionMismatch(format!(
            "estimate {:?}, truth {:?}, observed {:?}",
            prob_hat.shape(),
            p_true.shape(),
            observed.shape()
        )));
    }
    let (n, d) = prob_hat.shape();
    let mut gen = 0.0;
    let mut rec = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..d {
            if mask == ErrorMask::OffDiagonal && i == j {
                continue;
            }
            let p = prob_hat[(i, j)];
            gen += (p - p_true[(i, j)]).powi(2);
            rec += (p - observed[(i, j)]).powi(2);
            count += 1;
        }
    }
    let count = count.max(1) as f64;
    Ok((gen / count, rec / count))
}

/// Errors of a natural-parameter estimate `Θ̂`, compared on the probability
/// scale `σ(Θ̂)`. Returns (generalization, reconstruction).
pub fn model_errors(
    theta_hat: &DenseMatrix,
    p_true: &DenseMatrix,
    observed: &DenseMatrix,
    mask: ErrorMask,
) -> Result<(f64, f64)> {
    probability_errors(&theta_hat.map(logistic), p_true, observed, mask)
}

/// How a spectral baseline turns its embedding into a probability matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralEstimate {
    /// Block-constant means of the adjacency under the k-means labels.
    #[default]
    BlockMean,
    /// `V Vᵀ A V Vᵀ` for the bottom-`k` eigenvectors `V`, clipped to [0, 1].
    Projection,
}

/// `V Vᵀ A V Vᵀ` clipped to [0, 1], with `V` given by its rows.
pub fn projection_estimate(a: &DenseMatrix, rows: &[Vec<f64>]) -> Result<DenseMatrix> {
    let n = a.rows();
    let k = rows.first().map_or(0, Vec::len);
    let v = DenseMatrix::from_fn(n, k, |i, c| rows[i][c]);
    let vvt = v.matmul(&v.transpose())?;
    Ok(vvt.matmul(a)?.matmul(&vvt)?.map(|x| x.clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Greedy,
    SpectralNorm,
    SpectralUnnorm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Greedy, Method::SpectralNorm, Method::SpectralUnnorm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "Greedy",
            Method::SpectralNorm => "Spectral_norm",
            Method::SpectralUnnorm => "Spectral_unnorm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringGrid {
    pub n: usize,
    pub k_true: usize,
    pub p_values: Vec<f64>,
    pub hyper_ks: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub spectral_estimate: SpectralEstimate,
}

impl ClusteringGrid {
    /// `n = 60`, three clusters, `p = 0.55, 0.60, …, 0.95`, `k ∈ {3, 5, 10}`.
    pub fn desk_scale(runs: usize, seed: u64) -> Self {
        ClusteringGrid {
            n: 60,
            k_true: 3,
            p_values: p_grid(0.55, 0.95, 0.05).expect("valid grid"),
            hyper_ks: vec![3, 5, 10],
            runs,
            seed,
            spectral_estimate: SpectralEstimate::BlockMean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.p_values.is_empty() || self.hyper_ks.is_empty() {
            return Err(Error::InvalidInput("grid must have runs, p values and hyper-k values".into()));
        }
        if let Some(&k) = self.hyper_ks.iter().find(|&&k| k == 0 || k > self.n) {
            return Err(Error::InvalidInput(format!("hyper-k {k} outside 1..={}", self.n)));
        }
        if let Some(&p) = self.p_values.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidInput(format!("p = {p} outside (0, 1]")));
        }
        Ok(())
    }

    /// Seed of the graph drawn for `(p_index, run)`.
    pub fn sample_seed(&self, p_index: usize, run: usize) -> u64 {
        derive_seed(self.seed, "sbm-sample", (p_index * self.runs + run) as u64)
    }
}

/// `start, start+step, …, end` (inclusive, with rounding slack).
pub fn p_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || start > end {
        return Err(Error::InvalidInput(format!(
            "invalid grid {start}:{end}:{step}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringRow {
    pub method: Method,
    pub k: usize,
    pub p: f64,
    pub run: usize,
    pub reconstruction: f64,
    pub generalization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub method: Method,
    pub k: usize,
    pub p: f64,
    pub run: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringOutput {
    pub rows: Vec<ClusteringRow>,
    pub failures: Vec<CellFailure>,
}

impl ClusteringOutput {
    pub fn success_fraction(&self) -> f64 {
        let total = self.rows.len() + self.failures.len();
        if total == 0 {
            1.0
        } else {
            self.rows.len() as f64 / total as f64
        }
    }

    /// `method,k,p,run,reconstruction,generalization` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,k,p,run,reconstruction,generalization\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:e},{:e}",
                r.method.name(),
                r.k,
                r.p,
                r.run,
                r.reconstruction,
                r.generalization
            );
        }
        out
    }
}

fn clustering_cell(
    estimate: SpectralEstimate,
    sample: &SbmSample,
    method: Method,
    k: usize,
    cell_seed: u64,
) -> Result<(f64, f64)> {
    let a = &sample.adjacency;
    match method {
        Method::Greedy => {
            let obj = LogisticPca::new(a.clone())?;
            let fit = run_geco(&obj, &SolverConfig::geco(k, cell_seed))?;
            model_errors(fit.estimate(), &sample.p_true, a, ErrorMask::OffDiagonal)
        }
        Method::SpectralNorm | Method::SpectralUnnorm => {
            let points = spectral_embedding(a, k, method == Method::SpectralNorm)?;
            let est = match estimate {
                SpectralEstimate::BlockMean => {
                    let labels = kmeans(&points, k, cell_seed, 10)?.labels;
                    block_mean_estimate(a, &labels)?
                }
                SpectralEstimate::Projection => projection_estimate(a, &points)?,
            };
            probability_errors(&est, &sample.p_true, a, ErrorMask::OffDiagonal)
        }
    }
}

/// Every `(p, method, hyper-k, run)` cell of the grid. Rows come out sorted
/// by `(p, method, k, run)`; failed cells are collected separately.
pub fn run_clustering_experiment(grid: &ClusteringGrid) -> Result<ClusteringOutput> {
    grid.validate()?;
    let samples: Vec<(usize, usize, SbmSample)> = (0..grid.p_values.len())
        .flat_map(|pi| (0..grid.runs).map(move |run| (pi, run)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(pi, run)| {
            let cfg = SbmConfig {
                n: grid.n,
                k_true: grid.k_true,
                p: grid.p_values[pi],
                seed: grid.sample_seed(pi, run),
            };
            sbm_generate(&cfg).map(|s| (pi, run, s))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (si, (pi, run, _)) in samples.iter().enumerate() {
        for method in Method::ALL {
            for &k in &grid.hyper_ks {
                cells.push((si, *pi, *run, method, k));
            }
        }
    }

    type CellResult = (usize, usize, Method, usize, Result<(f64, f64)>);
    let results: Vec<CellResult> = cells
        .into_par_iter()
        .map(|(si, pi, run, method, k)| {
            let tag = format!("cell-{}-{}", method.name(), k);
            let cell_seed = derive_seed(grid.seed, &tag, (pi * grid.runs + run) as u64);
            let res = clustering_cell(grid.spectral_estimate, &samples[si].2, method, k, cell_seed);
            (pi, run, method, k, res)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (pi, run, method, k, res) in results {
        let p = grid.p_values[pi];
        match res {
            Ok((generalization, reconstruction)) => rows.push(ClusteringRow {
                method,
                k,
                p,
                run,
                reconstruction,
                generalization,
            }),
            Err(e) => {
                log::warn!("cell {} k={k} p={p} run={run} failed: {e}", method.name());
                failures.push(CellFailure {
                    method,
                    k,
                    p,
                    run,
                    message: e.to_string(),
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        a.p.total_cmp(&b.p)
            .then(a.method.cmp(&b.method))
            .then(a.k.cmp(&b.k))
            .then(a.run.cmp(&b.run))
    });
    Ok(ClusteringOutput { rows, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub m1: usize,
    pub m2: usize,
    /// Rank of the planted matrix.
    pub r: usize,
    /// Number of measurements.
    pub n: usize,
    pub sigma: f64,
    /// GECO steps.
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RecoveryInstance {
    pub theta_star: DenseMatrix,
    pub loss: LinearMeasurements,
}

/// Planted `Θ*` (sum of `r` random unit rank-1 terms, rescaled to unit
/// Frobenius norm) observed through `n` Gaussian measurements with
/// `N(0, σ²)` noise.
pub fn recovery_instance(cfg: &RecoveryConfig) -> Result<RecoveryInstance> {
    if cfg.m1 == 0 || cfg.m2 == 0 || cfg.n == 0 || !(cfg.sigma >= 0.0) {
        return Err(Error::InvalidInput("recovery parameters must be positive".into()));
    }
    let mut rng = rng_for(cfg.seed, "recovery-truth", 0);
    let mut theta = DenseMatrix::zeros(cfg.m1, cfg.m2);
    for _ in 0..cfg.r {
        let u = random_unit_vector(cfg.m1, &mut rng);
        let v = random_unit_vector(cfg.m2, &mut rng);
        theta.add_outer(1.0, &u, &v);
    }
    let norm = theta.frobenius_norm();
    if norm > 0.0 {
        theta = theta.scale(1.0 / norm);
    }

    let mut rng = rng_for(cfg.seed, "recovery-design", 0);
    let design = DenseMatrix::random_normal(cfg.n, cfg.m1 * cfg.m2, &mut rng);
    let noise = Normal::new(0.0, cfg.sigma.max(0.0)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = rng_for(cfg.seed, "recovery-noise", 0);
    let y: Vec<f64> = (0..cfg.n)
        .map(|i| dot(design.row(i), theta.as_slice()) + if cfg.sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 })
        .collect();
    let loss = LinearMeasurements::from_design((cfg.m1, cfg.m2), design, y)?;
    Ok(RecoveryInstance {
        theta_star: theta,
        loss,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub config: RecoveryConfig,
    /// `‖B^(S_k) − Θ*‖²_F`.
    pub error: f64,
    pub f_value: f64,
    /// Full-space curvature, absent for a singular design.
    pub curvature: Option<CurvaturePair>,
    pub rsc_bound: f64,
    /// Curvature used in the bound: `max(m_gram, rsc_bound)`.
    pub m_used: f64,
    pub approx_ratio: f64,
    pub bound: BoundReport,
}

impl RecoveryReport {
    pub const CSV_HEADER: &'static str =
        "m1,m2,r,n,sigma,k,seed,error,m,C,rhs,slack,holds";

    pub fn csv_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{}",
            c.m1,
            c.m2,
            c.r,
            c.n,
            c.sigma,
            c.k,
            c.seed,
            self.error,
            self.m_used,
            self.approx_ratio,
            self.bound.rhs,
            self.bound.slack,
            self.bound.status()
        )
    }
}

/// Samples a recovery instance, runs GECO for `k` steps, and checks the
/// recovery bound with `B_r = Θ*`.
pub fn run_recovery_experiment(cfg: &RecoveryConfig) -> Result<RecoveryReport> {
    let inst = recovery_instance(cfg)?;
    let solver = SolverConfig::geco(cfg.k, derive_seed(cfg.seed, "recovery-geco", 0));
    let fit = run_geco(&inst.loss, &solver)?;
    let error = fit.estimate().sub(&inst.theta_star).frobenius_sq();

    let curvature = match quadratic_curvature(&inst.loss) {
        Ok(c) => Some(c),
        Err(Error::SingularDesign(_)) => None,
        Err(e) => return Err(e),
    };
    let rsc_bound = gaussian_rsc_bound(cfg.n, (cfg.m1 * cfg.m2) as f64, cfg.k, cfg.r);
    let m_used = curvature.map_or(rsc_bound, |c| c.m.max(rsc_bound));
    // without an upper curvature constant the weakest guarantee C = 0 is used
    let approx_ratio = match curvature {
        Some(c) if cfg.r > 0 => approx_bound(solver.tau, m_used.min(c.big_m) / c.big_m, cfg.k, cfg.r, true),
        Some(_) => 1.0,
        None => 0.0,
    };
    let bound = if m_used > 0.0 {
        check_recovery_bound(
            &inst.loss,
            fit.estimate(),
            &inst.theta_star,
            m_used,
            approx_ratio,
            cfg.k,
            cfg.r,
            derive_seed(cfg.seed, "recovery-norm", 0),
        )?
    } else {
        BoundReport::vacuous("recovery", cfg.seed)
    };
    Ok(RecoveryReport {
        config: cfg.clone(),
        error,
        f_value: fit.value(),
        curvature,
        rsc_bound,
        m_used,
        approx_ratio,
        bound,
    })
}

/// `per_center` Gaussian points around each center.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_center: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_for(seed, "blobs", 0);
    centers
        .iter()
        .flat_map(|c| std::iter::repeat_n(c, per_center))
        .map(|c| {
            c.iter()
                .map(|&x| x + spread * rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<f64>>()
        })
        .collect()
}
