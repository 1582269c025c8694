use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use super::knn::PointGrid;
use super::{DiagError, EmpiricalMeasure};
use crate::geometry::Vec3;

/// A scalar estimate with its standard error and estimator description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
    pub estimator: String,
    /// Points left out of the estimate (duplicates for k-NN).
    #[serde(default)]
    pub excluded: usize,
}

/// Mean and standard error of per-point terms, either treating the points as
/// independent or, with `groups`, from the spread of group means.
fn mean_and_se(terms: &[f64], groups: Option<&[usize]>) -> (f64, f64) {
    let n = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / n;
    match groups {
        Some(sizes) if sizes.len() >= 2 => {
            let mut means = Vec::with_capacity(sizes.len());
            let mut at = 0;
            for &s in sizes {
                let chunk = &terms[at..at + s];
                at += s;
                if !chunk.is_empty() {
                    means.push(chunk.iter().sum::<f64>() / s as f64);
                }
            }
            (mean, sample_se(&means))
        }
        _ => (mean, sample_se(terms)),
    }
}

/// Standard error of the mean of `x`.
pub fn sample_se(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Nearest-neighbour distances at or below this fraction of the sample
/// spread count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;
pub const ENTROPY_MIN_SAMPLES: usize = 100;
pub const FISHER_MIN_SAMPLES: usize = 1000;

/// Kozachenko–Leonenko differential entropy `−∫ f log f` of a 3D sample.
pub fn entropy_knn(mu: &EmpiricalMeasure, k: usize) -> Result<Estimate, DiagError> {
    entropy_knn_grouped(mu, k, None)
}

/// As [`entropy_knn`], with the standard error taken across consecutive
/// groups of the given sizes (replicas).
pub fn entropy_knn_grouped(mu: &EmpiricalMeasure, k: usize, groups: Option<&[usize]>) -> Result<Estimate, DiagError> {
    let x = mu.samples();
    let n = x.len();
    if n < ENTROPY_MIN_SAMPLES {
        return Err(DiagError::TooFewSamples { need: ENTROPY_MIN_SAMPLES, got: n });
    }
    if k == 0 || k >= n {
        return Err(DiagError::Invalid(format!("k = {k} neighbours for {n} points")));
    }
    check_groups(groups, n)?;
    let grid = PointGrid::new(x, PointGrid::cell_for(x, 4.0 * k as f64));
    let spread = mu.spread();
    let base = digamma(n as f64) - digamma(k as f64) + (4.0 * PI / 3.0).ln();
    let mut excluded = 0;
    let mut terms = Vec::with_capacity(n);
    let mut kept_groups = groups.map(|g| g.to_vec());
    let mut owner = group_owner(groups, n);
    for i in 0..n {
        let eps = grid.knn_distances(i, k)[k - 1];
        if eps <= DUPLICATE_TOL * spread {
            excluded += 1;
            if let (Some(g), Some(o)) = (kept_groups.as_mut(), owner.as_mut()) {
                g[o[i]] -= 1;
            }
            continue;
        }
        terms.push(base + 3.0 * eps.ln());
    }
    if terms.is_empty() {
        return Err(DiagError::Invalid("every point is a duplicate".into()));
    }
    let (value, se) = mean_and_se(&terms, kept_groups.as_deref());
    Ok(Estimate { value, se, n, estimator: format!("kozachenko-leonenko k={k}"), excluded })
}

/// Bandwidth of [`fisher_kde`]: Silverman's rule for the gradient of a 3D
/// density, `(4/5)^{1/7} σ n^{−1/7}`.
pub fn fisher_bandwidth(mu: &EmpiricalMeasure) -> f64 {
    let n = mu.len() as f64;
    (4.0f64 / 5.0).powf(1.0 / 7.0) * mu.spread() * n.powf(-1.0 / 7.0)
}

/// Kernel-density truncation radius in bandwidths.
const KDE_REACH: f64 = 4.5;

/// Fisher information `∫ |∇f|²/f` of the sampled law from the score of a
/// leave-one-out Gaussian kernel density estimate, averaged over the sample.
///
/// The squared gradient at `x_i` drops the `j = k` terms of
/// `|Σ_j ∇K(x_i − x_j)|²`, which would otherwise add the estimator's own
/// variance; each point's term is clipped at zero.
pub fn fisher_kde(mu: &EmpiricalMeasure) -> Result<Estimate, DiagError> {
    fisher_kde_grouped(mu, None)
}

pub fn fisher_kde_grouped(mu: &EmpiricalMeasure, groups: Option<&[usize]>) -> Result<Estimate, DiagError> {
    let x = mu.samples();
    let n = x.len();
    if n < FISHER_MIN_SAMPLES {
        return Err(DiagError::TooFewSamples { need: FISHER_MIN_SAMPLES, got: n });
    }
    check_groups(groups, n)?;
    let h = fisher_bandwidth(mu);
    if !(h > 0.0 && h.is_finite()) {
        return Err(DiagError::Invalid(format!("degenerate bandwidth {h}")));
    }
    let terms = kde_scores(x, h);
    let (value, se) = mean_and_se(&terms, groups);
    Ok(Estimate { value, se, n, estimator: format!("kde-score loo, diagonal removed, h={h:.4e}"), excluded: 0 })
}

/// `|∇ log f_h(x_i)|²` for the leave-one-out density at each point.
fn kde_scores(x: &[Vec3], h: f64) -> Vec<f64> {
    let grid = PointGrid::new(x, 0.5 * KDE_REACH * h);
    let inv = 1.0 / (2.0 * h * h);
    x.iter()
        .enumerate()
        .map(|(i, p)| {
            let mut wsum = 0.0;
            let mut g = Vec3::ZERO;
            let mut diag = 0.0;
            grid.for_each_within(*p, KDE_REACH * h, |j, d| {
                if j != i {
                    let w = (-d.norm_sq() * inv).exp();
                    wsum += w;
                    g += d * w;
                    diag += (d * w).norm_sq();
                }
            });
            if wsum > 0.0 {
                ((g.norm_sq() - diag) / (wsum * wsum * h.powi(4))).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

fn check_groups(groups: Option<&[usize]>, n: usize) -> Result<(), DiagError> {
    if let Some(g) = groups {
        if g.iter().sum::<usize>() != n {
            return Err(DiagError::Invalid("group sizes do not cover the sample".into()));
        }
    }
    Ok(())
}

fn group_owner(groups: Option<&[usize]>, n: usize) -> Option<Vec<usize>> {
    groups.map(|g| {
        let mut o = Vec::with_capacity(n);
        for (k, &s) in g.iter().enumerate() {
            o.extend(std::iter::repeat_n(k, s));
        }
        o
    })
}
