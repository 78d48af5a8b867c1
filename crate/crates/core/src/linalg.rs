//! Small complex/real linear-algebra helpers shared by the signal model,
//! the bound calculators and the estimators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance below which a Gram-Schmidt residual counts as linear dependence.
pub const RANK_TOL: f64 = 1e-10;

/// Condition-number ceiling for inverting Fisher information matrices.
pub const COND_MAX: f64 = 1e12;

pub fn kron(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        let base = i * b.len();
        for (j, bj) in b.iter().enumerate() {
            out[base + j] = ai * bj;
        }
    }
    out
}

pub fn kron3(a: &CVector, b: &CVector, c: &CVector) -> CVector {
    kron(&kron(a, b), c)
}

/// `a^H b`
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

/// Orthonormal basis of `span{vectors}` by modified Gram-Schmidt with one
/// re-orthogonalisation pass. Fails if the vectors are (numerically) dependent.
pub fn orthonormal_basis(vectors: &[CVector]) -> Result<Vec<CVector>> {
    let mut basis: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.norm();
        if scale == 0.0 {
            return Err(Error::RankDeficient);
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                w.axpy(-c, q, Complex64::new(1.0, 0.0));
            }
        }
        let n = w.norm();
        if n <= RANK_TOL * scale {
            return Err(Error::RankDeficient);
        }
        basis.push(w / Complex64::new(n, 0.0));
    }
    Ok(basis)
}

/// `(I - P) v` where `P` projects onto the span of the orthonormal `basis`.
pub fn project_out(basis: &[CVector], v: &CVector) -> CVector {
    let mut w = v.clone();
    for q in basis {
        let c = inner(q, &w);
        w.axpy(-c, q, Complex64::new(1.0, 0.0));
    }
    w
}

/// Least-squares coefficients `argmin_x ||y - A x||` for `A = [cols]`, via QR.
pub fn least_squares(cols: &[CVector], y: &CVector) -> Result<Vec<Complex64>> {
    if cols.is_empty() {
        return Ok(Vec::new());
    }
    let a = CMatrix::from_columns(cols);
    let k = cols.len();
    let qr = a.qr();
    let q = qr.q();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].norm() <= RANK_TOL * max_diag) {
        return Err(Error::RankDeficient);
    }
    let qhy = q.adjoint() * y;
    let mut x = vec![Complex64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let mut s = qhy[i];
        for j in i + 1..k {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    Ok(x)
}

/// Inverse of a symmetric positive-definite matrix with Jacobi equilibration.
///
/// Returns `None` when the equilibrated matrix is indefinite or its condition
/// number exceeds [`COND_MAX`].
pub fn invert_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = m[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    if d.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return None;
    }
    let mut s = m.clone();
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] *= d[i] * d[j];
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) || max / min > COND_MAX {
        return None;
    }
    let inv_s = s.cholesky()?.inverse();
    let mut out = inv_s;
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] *= d[i] * d[j];
        }
    }
    Some(out)
}

/// Generalized inverse of a symmetric positive-semidefinite matrix.
///
/// The matrix is Jacobi-equilibrated and eigen-decomposed; eigenvalues below
/// `max / COND_MAX` are treated as zero. The stored inverse satisfies
/// `M X M = M`, which fixes every quadratic form `v^T X v` with `v` in the
/// range of `M`.
#[derive(Debug, Clone)]
pub struct PsdInverse {
    pub inverse: DMatrix<f64>,
    pub rank_deficient: bool,
    /// Per-coordinate weight in the numerical null space (equilibrated).
    null_weight: Vec<f64>,
}

/// Null-space weight above which a coordinate counts as unidentifiable.
const NULL_WEIGHT_TOL: f64 = 1e-6;

impl PsdInverse {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let d: Vec<f64> = (0..n)
            .map(|i| if m[(i, i)] > 0.0 { 1.0 / m[(i, i)].sqrt() } else { 1.0 })
            .collect();
        let s = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]) * d[i] * d[j]);
        let eig = s.symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let floor = max / COND_MAX;
        let mut inverse = DMatrix::zeros(n, n);
        let mut null_weight = vec![0.0; n];
        let mut rank_deficient = false;
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            if lam > floor && lam > 0.0 {
                inverse += v * v.transpose() / lam;
            } else {
                rank_deficient = true;
                for i in 0..n {
                    null_weight[i] += v[i] * v[i];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                inverse[(i, j)] *= d[i] * d[j];
            }
        }
        Self {
            inverse,
            rank_deficient,
            null_weight,
        }
    }

    /// Whether the coordinate's unit vector lies in the range of the matrix.
    pub fn identifiable(&self, i: usize) -> bool {
        self.null_weight[i] <= NULL_WEIGHT_TOL
    }

    /// `[M^+]_ii` for identifiable coordinates, `+inf` otherwise.
    pub fn variance(&self, i: usize) -> f64 {
        if self.identifiable(i) {
            self.inverse[(i, i)].max(0.0)
        } else {
            f64::INFINITY
        }
    }
}

/// Wrap an angle difference into `(-pi, pi]`.
pub fn wrap_pi(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}
