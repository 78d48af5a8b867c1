use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, CVector};

use super::dictionary::Dictionary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OmpStop {
    /// `||r|| < residual_th`.
    Threshold,
    MaxIterations,
    /// The next atom made the support rank deficient and was dropped.
    RankDeficient,
}

/// Greedy path of one OMP run.
#[derive(Debug, Clone, Serialize)]
pub struct OmpResult {
    /// Selected atoms in order of selection.
    pub support: Vec<usize>,
    /// Least-squares coefficients after the last iteration.
    pub coefficients: Vec<Complex64>,
    /// `||r||` before the first iteration and after every iteration.
    pub residual_norms: Vec<f64>,
    /// Coefficients after iteration `k` (`coefficient_path[k - 1]`).
    pub coefficient_path: Vec<Vec<Complex64>>,
    pub stop: OmpStop,
}

impl OmpResult {
    /// Number of atoms the run would have selected with threshold `th`.
    ///
    /// The stopping rule only compares `||r||` against the threshold, so one
    /// run with a small threshold contains every larger-threshold run as a
    /// prefix.
    pub fn support_size_at(&self, th: f64) -> usize {
        self.residual_norms
            .iter()
            .position(|&r| r < th)
            .unwrap_or(self.support.len())
            .min(self.support.len())
    }

    /// Support and coefficients of the run truncated at threshold `th`.
    pub fn truncate(&self, th: f64) -> (&[usize], &[Complex64]) {
        let k = self.support_size_at(th);
        if k == 0 {
            return (&[], &[]);
        }
        (&self.support[..k], &self.coefficient_path[k - 1])
    }
}

/// Orthogonal matching pursuit of `y` over `dict`.
pub fn omp(y: &CVector, dict: &Dictionary, residual_th: f64, max_iter: usize) -> Result<OmpResult> {
    if !(residual_th > 0.0) {
        return Err(Error::InvalidParameter("residual threshold must be positive".into()));
    }
    let mut r = y.clone();
    let mut support: Vec<usize> = Vec::new();
    let mut atoms: Vec<CVector> = Vec::new();
    let mut coefficients = Vec::new();
    let mut residual_norms = vec![r.norm()];
    let mut coefficient_path = Vec::new();
    let mut stop = OmpStop::MaxIterations;
    while support.len() < max_iter {
        if r.norm() < residual_th {
            stop = OmpStop::Threshold;
            break;
        }
        let obj = dict.objective(&r)?;
        let best = obj
            .iter()
            .enumerate()
            .filter(|(i, _)| !support.contains(i))
            .fold(None, |acc: Option<(usize, f64)>, (i, &v)| match acc {
                Some((_, b)) if b >= v => acc,
                _ => Some((i, v)),
            });
        let Some((idx, val)) = best else {
            stop = OmpStop::RankDeficient;
            break;
        };
        if val == 0.0 {
            stop = OmpStop::RankDeficient;
            break;
        }
        atoms.push(dict.atom(idx));
        let x = match least_squares(&atoms, y) {
            Ok(x) => x,
            Err(Error::RankDeficient) => {
                atoms.pop();
                stop = OmpStop::RankDeficient;
                break;
            }
            Err(e) => return Err(e),
        };
        support.push(idx);
        r = y.clone();
        for (a, c) in atoms.iter().zip(&x) {
            r.axpy(-*c, a, Complex64::new(1.0, 0.0));
        }
        residual_norms.push(r.norm());
        coefficient_path.push(x.clone());
        coefficients = x;
    }
    if stop == OmpStop::MaxIterations && r.norm() < residual_th {
        stop = OmpStop::Threshold;
    }
    Ok(OmpResult {
        support,
        coefficients,
        residual_norms,
        coefficient_path,
        stop,
    })
}
