//! Distribution-level image-quality metrics at the pure-math level:
//! Inception Score over class-probability matrices, Gaussian-kernel MMD
//! between feature samples, and the Frechet distance between fitted
//! Gaussians. Feature extraction happens upstream; these consume matrices.
//!
//! Note on the kernel: the exponent here is `-|x - y|^2 / (2 sigma)` with a
//! variance-like bandwidth `sigma`, not the `2 sigma^2` form some references
//! use. The median heuristic accounts for this (median squared distance / 2).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Inception Score
// ---------------------------------------------------------------------------

/// Rows of per-sample class probabilities.
#[derive(Debug, Clone)]
pub struct ProbMatrix {
    rows: DMatrix<f64>,
}

impl ProbMatrix {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::TooFewSamples("empty probability matrix".into()));
        }
        for i in 0..rows.nrows() {
            let mut sum = 0.0;
            for &v in rows.row(i).iter() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidConfig(format!(
                        "probability {v} outside [0, 1] in row {i}"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidConfig(format!(
                    "row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn n_samples(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.rows.ncols()
    }
}

/// `IS = exp(mean_i KL(p(y|x_i) || p(y)))` with the marginal taken as the
/// column means and `0 log(0/q) = 0`.
pub fn inception_score(p: &ProbMatrix) -> Result<f64> {
    let (n, c) = (p.rows.nrows(), p.rows.ncols());
    let mut marginal = vec![0.0f64; c];
    for i in 0..n {
        for j in 0..c {
            marginal[j] += p.rows[(i, j)];
        }
    }
    for m in &mut marginal {
        *m /= n as f64;
    }
    let mut mean_kl = 0.0;
    for i in 0..n {
        let mut kl = 0.0;
        for j in 0..c {
            let pij = p.rows[(i, j)];
            if pij > 0.0 {
                if marginal[j] <= 0.0 {
                    return Err(Error::ZeroMarginalWithMass { row: i, class: j });
                }
                kl += pij * (pij / marginal[j]).ln();
            }
        }
        mean_kl += kl;
    }
    Ok((mean_kl / n as f64).exp())
}

// ---------------------------------------------------------------------------
// Kernel MMD
// ---------------------------------------------------------------------------

/// Feature embeddings, one sample per row.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    rows: DMatrix<f64>,
}

impl FeatureSet {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::TooFewSamples("empty feature set".into()));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite feature values".into()));
        }
        Ok(Self { rows })
    }

    pub fn n_samples(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    /// Sample mean and unbiased (n-1) covariance.
    pub fn fit_gaussian(&self) -> Result<Gaussian> {
        let (n, d) = (self.rows.nrows(), self.rows.ncols());
        if n < 2 {
            return Err(Error::TooFewSamples(format!(
                "covariance fit needs >= 2 samples, got {n}"
            )));
        }
        let mut mean = DVector::zeros(d);
        for i in 0..n {
            mean += self.rows.row(i).transpose();
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(d, d);
        for i in 0..n {
            let dev = self.rows.row(i).transpose() - &mean;
            cov.gemm(1.0, &dev, &dev.transpose(), 1.0);
        }
        cov /= (n - 1) as f64;
        Ok(Gaussian { mean, cov })
    }
}

/// Bandwidth choice for the Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// Median of pairwise squared distances over the pooled sample, / 2.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MmdEstimator {
    /// U-statistic with within-set diagonals excluded (default).
    Unbiased,
    /// V-statistic including diagonals; nonnegative by construction.
    Biased,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MmdResult {
    pub value: f64,
    /// Bandwidth actually used (resolved from the median heuristic if asked).
    pub sigma: f64,
    pub estimator: MmdEstimator,
}

fn sq_dist(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..a.ncols() {
        let d = a[(i, k)] - b[(j, k)];
        s += d * d;
    }
    s
}

/// Median pairwise squared distance over the pooled sample, divided by 2.
pub fn median_heuristic_sigma(x: &FeatureSet, y: &FeatureSet) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    let pooled: Vec<(&DMatrix<f64>, usize)> = (0..x.n_samples())
        .map(|i| (&x.rows, i))
        .chain((0..y.n_samples()).map(|j| (&y.rows, j)))
        .collect();
    let n = pooled.len();
    let mut d2: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d2.push(sq_dist(pooled[i].0, pooled[i].1, pooled[j].0, pooled[j].1));
        }
    }
    if d2.is_empty() {
        return Err(Error::TooFewSamples(
            "median heuristic needs >= 2 pooled samples".into(),
        ));
    }
    d2.sort_by(|a, b| a.total_cmp(b));
    let m = d2.len();
    let median = if m % 2 == 1 {
        d2[m / 2]
    } else {
        0.5 * (d2[m / 2 - 1] + d2[m / 2])
    };
    let sigma = median / 2.0;
    if sigma <= 0.0 {
        return Err(Error::BandwidthNonPositive(sigma));
    }
    Ok(sigma)
}

/// Squared maximum mean discrepancy under the Gaussian kernel
/// `k(x, y) = exp(-|x - y|^2 / (2 sigma))`.
pub fn mmd_squared(
    x: &FeatureSet,
    y: &FeatureSet,
    bandwidth: Bandwidth,
    estimator: MmdEstimator,
) -> Result<MmdResult> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    let sigma = match bandwidth {
        Bandwidth::Fixed(s) => {
            if s <= 0.0 {
                return Err(Error::BandwidthNonPositive(s));
            }
            s
        }
        Bandwidth::Median => median_heuristic_sigma(x, y)?,
    };
    let (n, m) = (x.n_samples(), y.n_samples());
    if estimator == MmdEstimator::Unbiased && (n < 2 || m < 2) {
        return Err(Error::TooFewSamples(format!(
            "unbiased estimator needs >= 2 samples per set, got {n} and {m}"
        )));
    }
    let k = |a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize| {
        (-sq_dist(a, i, b, j) / (2.0 * sigma)).exp()
    };

    let mut kxx = 0.0;
    let mut kyy = 0.0;
    let mut kxy = 0.0;
    for i in 0..n {
        for j in 0..n {
            if estimator == MmdEstimator::Unbiased && i == j {
                continue;
            }
            kxx += k(&x.rows, i, &x.rows, j);
        }
    }
    for i in 0..m {
        for j in 0..m {
            if estimator == MmdEstimator::Unbiased && i == j {
                continue;
            }
            kyy += k(&y.rows, i, &y.rows, j);
        }
    }
    for i in 0..n {
        for j in 0..m {
            kxy += k(&x.rows, i, &y.rows, j);
        }
    }
    let value = match estimator {
        MmdEstimator::Unbiased => {
            kxx / (n * (n - 1)) as f64 + kyy / (m * (m - 1)) as f64 - 2.0 * kxy / (n * m) as f64
        }
        MmdEstimator::Biased => {
            kxx / (n * n) as f64 + kyy / (m * m) as f64 - 2.0 * kxy / (n * m) as f64
        }
    };
    Ok(MmdResult {
        value,
        sigma,
        estimator,
    })
}

// ---------------------------------------------------------------------------
// Frechet distance between fitted Gaussians
// ---------------------------------------------------------------------------

/// A fitted multivariate Gaussian.
#[derive(Debug, Clone)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

fn psd_eigen(cov: &DMatrix<f64>, context: &str) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if eig.eigenvalues.iter().any(|&v| v < -1e-6 * max.max(1e-12)) {
        return Err(Error::NotPsd(format!(
            "{context}: eigenvalue {:.3e} below tolerance",
            eig.eigenvalues.min()
        )));
    }
    Ok(eig)
}

/// Squared-mean distance plus the covariance trace term
/// `Tr(Sa) + Tr(Sb) - 2 sum_i sqrt(lambda_i)` where the `lambda_i` are the
/// eigenvalues of `Sa^{1/2} Sb Sa^{1/2}`.
pub fn fid(a: &Gaussian, b: &Gaussian) -> Result<f64> {
    let d = a.mean.len();
    if b.mean.len() != d || a.cov.nrows() != d || b.cov.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "gaussians of dimension {d} vs {}",
            b.mean.len()
        )));
    }
    let eig_a = psd_eigen(&a.cov, "first covariance")?;
    psd_eigen(&b.cov, "second covariance")?;

    // Sa^{1/2} via eigendecomposition with tiny negatives clamped to zero.
    let sqrt_vals = DVector::from_iterator(
        d,
        eig_a.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()),
    );
    let sqrt_a =
        &eig_a.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig_a.eigenvectors.transpose();

    let inner = &sqrt_a * &b.cov * &sqrt_a;
    let eig_inner = psd_eigen(&inner, "product form")?;
    let max = eig_inner
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let mut sqrt_trace = 0.0;
    for &lam in eig_inner.eigenvalues.iter() {
        if lam < -1e-8 * max.max(1e-12) {
            return Err(Error::NotPsd(format!(
                "product form eigenvalue {lam:.3e} is negative"
            )));
        }
        sqrt_trace += lam.max(0.0).sqrt();
    }

    let mean_term = (&a.mean - &b.mean).norm_squared();
    let trace_term = a.cov.trace() + b.cov.trace() - 2.0 * sqrt_trace;
    let value = mean_term + trace_term;
    if value < -1e-6 {
        return Err(Error::NotPsd(format!(
            "distance {value:.3e} below the negativity guard"
        )));
    }
    Ok(value.max(0.0))
}

// ---------------------------------------------------------------------------
// Score comparison report
// ---------------------------------------------------------------------------

/// One scored category under one metric, with its competition rank
/// (1 = best = lowest score; ties share a rank).
#[derive(Debug, Clone, Serialize)]
pub struct RankedScore {
    pub category: String,
    pub score: f64,
    pub rank: usize,
    pub tied: bool,
}

/// Per-metric rankings plus cross-metric agreement structure.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    /// (metric, ranked categories best-first).
    pub rankings: Vec<(String, Vec<RankedScore>)>,
    /// Metrics grouped by identical full orderings; each entry is
    /// (ordering best-to-worst, metrics sharing it).
    pub ordering_groups: Vec<(Vec<String>, Vec<String>)>,
    /// True when every metric induces the same full ordering.
    pub all_agree: bool,
}

/// Rank categories under each metric (lower score = better) and group
/// metrics by the full ordering they induce, surfacing disagreement.
pub fn metric_report(scores: &[(String, Vec<(String, f64)>)]) -> Result<MetricReport> {
    if scores.is_empty() {
        return Err(Error::TooFewSamples("no metrics to rank".into()));
    }
    let mut rankings = Vec::new();
    let mut ordering_groups: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for (metric, cats) in scores {
        if cats.len() < 2 {
            return Err(Error::TooFewSamples(format!(
                "metric {metric} has {} categories; ranking needs >= 2",
                cats.len()
            )));
        }
        let mut sorted: Vec<(String, f64)> = cats.clone();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut ranked: Vec<RankedScore> = Vec::with_capacity(sorted.len());
        for (i, (cat, score)) in sorted.iter().enumerate() {
            // competition ranking: equal scores share the earliest rank
            let rank = if i > 0 && *score == ranked[i - 1].score {
                ranked[i - 1].rank
            } else {
                i + 1
            };
            ranked.push(RankedScore {
                category: cat.clone(),
                score: *score,
                rank,
                tied: false,
            });
        }
        for i in 0..ranked.len() {
            let r = ranked[i].rank;
            ranked[i].tied = ranked.iter().enumerate().any(|(j, o)| j != i && o.rank == r);
        }
        let ordering: Vec<String> = ranked.iter().map(|r| r.category.clone()).collect();
        match ordering_groups.iter_mut().find(|(o, _)| *o == ordering) {
            Some((_, ms)) => ms.push(metric.clone()),
            None => ordering_groups.push((ordering, vec![metric.clone()])),
        }
        rankings.push((metric.clone(), ranked));
    }
    let all_agree = ordering_groups.len() == 1;
    Ok(MetricReport {
        rankings,
        ordering_groups,
        all_agree,
    })
}
