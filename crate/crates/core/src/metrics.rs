//! Empirical detection rates, ROC area and the GOSPA set distance.

use nalgebra::{DMatrix, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::assign;

/// Outcome of one Monte Carlo trial at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub true_count: usize,
    pub estimated_count: usize,
    pub true_positions: Vec<Vector3<f64>>,
    pub estimated_positions: Vec<Vector3<f64>>,
    pub threshold: f64,
}

/// Empirical rates of one group of trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rates {
    /// `p_d[l - 1]` is the fraction of trials with `L_hat >= l`.
    pub p_d: Vec<f64>,
    /// Fraction of trials with `L_hat > L`.
    pub p_fa: f64,
}

/// Sample means of `1[L_hat >= l]` for `l = 1..=L` and of `1[L_hat > L]`.
/// `L` is the largest true count in the group.
pub fn empirical_rates(records: &[TrialRecord]) -> Result<Rates> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("empty trial group".into()));
    }
    let n = records.len() as f64;
    let l = records.iter().map(|r| r.true_count).max().unwrap_or(0);
    let p_d = (1..=l)
        .map(|k| records.iter().filter(|r| r.estimated_count >= k).count() as f64 / n)
        .collect();
    let p_fa = records.iter().filter(|r| r.estimated_count > r.true_count).count() as f64 / n;
    Ok(Rates { p_d, p_fa })
}

/// Area under the ROC through `(p_fa, p_d)` points: sorted by `p_fa`, made
/// monotone by a running maximum of `p_d`, closed with `(0, 0)` and `(1, 1)`
/// and integrated with the trapezoidal rule.
pub fn empirical_auc(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .map(|&(f, d)| (f.clamp(0.0, 1.0), d.clamp(0.0, 1.0)))
        .collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut best: f64 = 0.0;
    for p in pts.iter_mut() {
        best = best.max(p.1);
        p.1 = best;
    }
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

/// Cutoff, order and cardinality normalization of GOSPA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GospaParams {
    pub c: f64,
    pub p: f64,
    pub alpha: f64,
}

impl Default for GospaParams {
    fn default() -> Self {
        Self {
            c: 5.0,
            p: 2.0,
            alpha: 2.0,
        }
    }
}

/// GOSPA distance between two point sets with Euclidean base distance.
pub fn gospa(truth: &[Vector3<f64>], estimate: &[Vector3<f64>], params: &GospaParams) -> Result<f64> {
    let GospaParams { c, p, alpha } = *params;
    if !(c > 0.0) || !(p >= 1.0) || !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter("GOSPA needs c > 0, p >= 1, 0 < alpha <= 2".into()));
    }
    let cp = c.powf(p);
    let cost = DMatrix::from_fn(truth.len(), estimate.len(), |i, j| (truth[i] - estimate[j]).norm().min(c).powf(p));
    let (_, matched) = assign(&cost);
    let unmatched = truth.len().abs_diff(estimate.len()) as f64;
    // Truncated distances make an assignment at the cutoff cost c^p, never
    // more than leaving both points unassigned (2 c^p / alpha).
    let total = matched + cp / alpha * unmatched;
    Ok(total.powf(1.0 / p))
}

/// Mean and 95 % normal confidence half-width.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}
