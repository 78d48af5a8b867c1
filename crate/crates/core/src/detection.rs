//! Coherence measures and detection-probability bounds for a greedy
//! (successive-cancellation) detector with perfectly known atoms.
//!
//! Target indices are 0-based: `l = 0` is the first target to be detected.
//! The observation is `y = sum_i alpha_i g_i + e` with `e ~ CN(0, sigma2 / 2 I)`;
//! `sigma2` always denotes the raw per-symbol noise power.

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{inner, orthonormal_basis, project_out, CVector, RANK_TOL};
use crate::signal::SignalModel;

/// First-order Marcum Q function `Q_1(a, b)`, the tail `P(X > b^2)` of a
/// noncentral chi-square variable with two degrees of freedom and
/// noncentrality `a^2`.
///
/// Evaluated as `P(J <= K)` for independent `K ~ Poisson(a^2 / 2)` and
/// `J ~ Poisson(b^2 / 2)`, summing whichever of `Q` and `1 - Q` is the smaller
/// tail.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    assert!(a >= 0.0 && b >= 0.0, "marcum_q1 needs nonnegative arguments");
    if b == 0.0 {
        return 1.0;
    }
    if a == 0.0 {
        return (-0.5 * b * b).exp();
    }
    // exp(-(b - a)^2 / 2) bounds the far tails.
    if b - a > 40.0 {
        return 0.0;
    }
    if a - b > 40.0 {
        return 1.0;
    }
    let x = 0.5 * a * a;
    let y = 0.5 * b * b;
    if a < b {
        // Q = sum_k pK(k) FJ(k)
        poisson_tail_sum(x, y, 0)
    } else {
        // 1 - Q = P(J > K) = sum_j pJ(j) FK(j - 1)
        1.0 - poisson_tail_sum(y, x, 1)
    }
}

fn poisson_window(lambda: f64) -> (u64, u64) {
    let w = 40.0 * lambda.sqrt() + 40.0;
    ((lambda - w).max(0.0).floor() as u64, (lambda + w).ceil() as u64)
}

fn ln_poisson(k: u64, lambda: f64) -> f64 {
    -lambda + k as f64 * lambda.ln() - ln_gamma(k as f64 + 1.0)
}

/// `sum_k pOuter(k) * P(Inner <= k - shift)` with `Outer ~ Pois(lo)`,
/// `Inner ~ Pois(li)`.
fn poisson_tail_sum(lo: f64, li: f64, shift: u64) -> f64 {
    let (k0, k1) = poisson_window(lo);
    let (j0, _) = poisson_window(li);
    let mut total = 0.0;
    let mut cdf = 0.0;
    let mut j = j0;
    for k in k0..=k1 {
        if k < shift {
            continue;
        }
        let top = k - shift;
        while j <= top {
            cdf += ln_poisson(j, li).exp();
            j += 1;
        }
        if cdf > 0.0 {
            total += ln_poisson(k, lo).exp() * cdf.min(1.0);
        }
    }
    total.clamp(0.0, 1.0)
}

/// Threshold `gamma_th = -2 log p_fa`.
pub fn threshold(p_fa: f64) -> f64 {
    -2.0 * p_fa.ln()
}

pub fn coherence(g1: &CVector, g2: &CVector) -> Result<f64> {
    let n1 = g1.norm_squared();
    let n2 = g2.norm_squared();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((inner(g1, g2).norm_sqr() / (n1 * n2)).min(1.0))
}

/// Fraction of `g3`'s energy in `span{g1, g2}`.
pub fn generalized_coherence(g1: &CVector, g2: &CVector, g3: &CVector) -> Result<f64> {
    let c12 = coherence(g1, g2)?;
    let n3 = g3.norm_squared();
    if n3 == 0.0 {
        return Err(Error::ZeroVector);
    }
    if 1.0 - c12 <= RANK_TOL {
        return Err(Error::DegeneratePair);
    }
    let v = g1 * inner(g3, g2) - g2 * inner(g3, g1);
    let num = v.norm_squared();
    let den = g1.norm_squared() * g2.norm_squared() * n3 * (1.0 - c12);
    Ok((num / den).clamp(0.0, 1.0))
}

/// Energy fraction of `g3` along the component of `g2` orthogonal to `g1`;
/// equals `C~(g1, g2, g3) - C(g1, g3)`.
pub fn breve_coherence(g1: &CVector, g2: &CVector, g3: &CVector) -> Result<f64> {
    let c12 = coherence(g1, g2)?;
    if 1.0 - c12 <= RANK_TOL {
        return Err(Error::DegeneratePair);
    }
    let n1 = g1.norm_squared();
    let num = (inner(g3, g2) * n1 - inner(g3, g1) * inner(g1, g2)).norm_sqr();
    let den = n1 * n1 * g2.norm_squared() * g3.norm_squared() * (1.0 - c12);
    if den == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(num / den)
}

/// Pairwise, generalized and breve coherences of an atom list.
#[derive(Debug, Clone, Serialize)]
pub struct CoherenceReport {
    pub pairwise: Vec<Vec<f64>>,
    /// `C~(g_0, g_1, g_2)` when at least three atoms are given.
    pub generalized: Option<f64>,
    pub breve: Option<f64>,
}

pub fn coherence_report(atoms: &[CVector]) -> Result<CoherenceReport> {
    let n = atoms.len();
    let mut pairwise = vec![vec![1.0; n]; n];
    for i in 0..n {
        for k in i + 1..n {
            let c = coherence(&atoms[i], &atoms[k])?;
            pairwise[i][k] = c;
            pairwise[k][i] = c;
        }
    }
    let (generalized, breve) = if n >= 3 {
        (
            Some(generalized_coherence(&atoms[0], &atoms[1], &atoms[2])?),
            Some(breve_coherence(&atoms[0], &atoms[1], &atoms[2])?),
        )
    } else {
        (None, None)
    };
    Ok(CoherenceReport {
        pairwise,
        generalized,
        breve,
    })
}

/// Component of `g_l` orthogonal to the previously detected atoms, and the
/// same projection applied to `g_l .. g_L`.
struct Residuals {
    /// `(I - P) g_l`.
    own: CVector,
    /// `(I - P) g_i` for `i >= l`.
    rest: Vec<CVector>,
}

fn residuals(atoms: &[CVector], l: usize) -> Result<Residuals> {
    if l >= atoms.len() {
        return Err(Error::InvalidParameter(format!(
            "target index {l} out of range for {} atoms",
            atoms.len()
        )));
    }
    let basis = orthonormal_basis(&atoms[..l])?;
    let rest: Vec<CVector> = atoms[l..].iter().map(|g| project_out(&basis, g)).collect();
    Ok(Residuals {
        own: rest[0].clone(),
        rest,
    })
}

/// Whether `(I - P) g_l` has vanished relative to `g_l`.
fn unidentifiable(r: &Residuals, g: &CVector) -> bool {
    r.own.norm() <= RANK_TOL * g.norm()
}

/// Noncentrality `mu_l = A_l beta_l` together with `A_l` and `beta_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Noncentrality {
    pub mu: f64,
    pub a: f64,
    pub beta: f64,
}

pub fn noncentrality(
    atoms: &[CVector],
    gains: &[Complex64],
    sigma2: f64,
    l: usize,
) -> Result<Noncentrality> {
    check_len(atoms.len(), gains.len())?;
    let r = residuals(atoms, l)?;
    let e = r.own.norm_squared();
    if unidentifiable(&r, &atoms[l]) {
        return Ok(Noncentrality {
            mu: 0.0,
            a: f64::INFINITY,
            beta: 0.0,
        });
    }
    let a = 4.0 / (sigma2 * e);
    let mut s = Complex64::new(0.0, 0.0);
    for (gi, ai) in r.rest.iter().zip(&gains[l..]) {
        s += inner(&r.own, gi) * ai;
    }
    let beta = s.norm_sqr();
    Ok(Noncentrality { mu: a * beta, a, beta })
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `Q_1(sqrt(mu), sqrt(gamma_th))`.
pub fn pd_from_noncentrality(mu: f64, p_fa: f64) -> f64 {
    if p_fa >= 1.0 {
        return 1.0;
    }
    if p_fa <= 0.0 {
        return 0.0;
    }
    marcum_q1(mu.max(0.0).sqrt(), threshold(p_fa).sqrt())
}

pub fn conditional_pd(
    atoms: &[CVector],
    gains: &[Complex64],
    sigma2: f64,
    l: usize,
    p_fa: f64,
) -> Result<f64> {
    Ok(pd_from_noncentrality(noncentrality(atoms, gains, sigma2, l)?.mu, p_fa))
}

/// `int_0^1 pd(p_fa) dp_fa` for noncentrality `mu`, integrated in
/// `u = log p_fa` over `[-30, 0]` by adaptive Simpson.
pub fn auc_from_noncentrality(mu: f64) -> f64 {
    let f = |u: f64| pd_from_noncentrality(mu, u.exp()) * u.exp();
    let lo: f64 = -30.0;
    let tail = lo.exp(); // pd <= 1 below the cut
    (adaptive_simpson(&f, lo, 0.0, 1e-9, 40) + 0.5 * tail).clamp(0.5, 1.0)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

pub fn conditional_auc(atoms: &[CVector], gains: &[Complex64], sigma2: f64, l: usize) -> Result<f64> {
    Ok(auc_from_noncentrality(noncentrality(atoms, gains, sigma2, l)?.mu))
}

/// `A_l` and `zeta_l = sum_{i >= l} varsigma_i^2 |g_l^H (I - P) g_i|^2`, so that
/// `A_l zeta_l` is half the mean noncentrality under Rayleigh gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedTerms {
    pub a: f64,
    pub zeta: f64,
}

impl ExpectedTerms {
    pub fn a_zeta(&self) -> f64 {
        if self.zeta == 0.0 {
            0.0
        } else {
            self.a * self.zeta
        }
    }
}

pub fn expected_terms(
    atoms: &[CVector],
    rayleigh_scales: &[f64],
    sigma2: f64,
    l: usize,
) -> Result<ExpectedTerms> {
    check_len(atoms.len(), rayleigh_scales.len())?;
    let r = residuals(atoms, l)?;
    if unidentifiable(&r, &atoms[l]) {
        return Ok(ExpectedTerms {
            a: f64::INFINITY,
            zeta: 0.0,
        });
    }
    let a = 4.0 / (sigma2 * r.own.norm_squared());
    let zeta = r
        .rest
        .iter()
        .zip(&rayleigh_scales[l..])
        .map(|(gi, s)| s * s * inner(&r.own, gi).norm_sqr())
        .sum();
    Ok(ExpectedTerms { a, zeta })
}

/// `exp(log p_fa / (A zeta + 1))`.
pub fn expected_pd_from(a_zeta: f64, p_fa: f64) -> f64 {
    if p_fa <= 0.0 {
        return 0.0;
    }
    (p_fa.ln() / (a_zeta + 1.0)).exp()
}

/// `(1 + A zeta) / (2 + A zeta)`.
pub fn expected_auc_from(a_zeta: f64) -> f64 {
    if a_zeta.is_infinite() {
        return 1.0;
    }
    (1.0 + a_zeta) / (2.0 + a_zeta)
}

pub fn expected_pd(
    atoms: &[CVector],
    rayleigh_scales: &[f64],
    sigma2: f64,
    l: usize,
    p_fa: f64,
) -> Result<f64> {
    Ok(expected_pd_from(
        expected_terms(atoms, rayleigh_scales, sigma2, l)?.a_zeta(),
        p_fa,
    ))
}

pub fn expected_auc(atoms: &[CVector], rayleigh_scales: &[f64], sigma2: f64, l: usize) -> Result<f64> {
    Ok(expected_auc_from(
        expected_terms(atoms, rayleigh_scales, sigma2, l)?.a_zeta(),
    ))
}

/// Detection by either stream: `(pd_joint, p_fa_joint)` for a common `p_fa`.
pub fn joint_pd(pd_n: f64, pd_r: f64, p_fa: f64) -> (f64, f64) {
    (pd_n + pd_r - pd_n * pd_r, 2.0 * p_fa - p_fa * p_fa)
}

/// Greedy detection order: descending expected receive SNR
/// `2 varsigma^2 ||g||^2 / sigma2`, ties broken by index.
pub fn detection_order(atoms: &[CVector], rayleigh_scales: &[f64]) -> Vec<usize> {
    let snr: Vec<f64> = atoms
        .iter()
        .zip(rayleigh_scales)
        .map(|(g, s)| s * s * g.norm_squared())
        .collect();
    let mut idx: Vec<usize> = (0..atoms.len()).collect();
    idx.sort_by(|&i, &k| snr[k].total_cmp(&snr[i]).then(i.cmp(&k)));
    idx
}

/// Per-target expected bounds of one stream, in detection order.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionBound {
    /// Original target index of each detection step.
    pub order: Vec<usize>,
    pub a: Vec<f64>,
    pub zeta: Vec<f64>,
    pub auc: Vec<f64>,
}

impl DetectionBound {
    pub fn pd(&self, step: usize, p_fa: f64) -> f64 {
        expected_pd_from(self.a_zeta(step), p_fa)
    }

    pub fn a_zeta(&self, step: usize) -> f64 {
        ExpectedTerms {
            a: self.a[step],
            zeta: self.zeta[step],
        }
        .a_zeta()
    }
}

/// Expected bounds for all targets using the greedy order.
pub fn detection_bound(atoms: &[CVector], rayleigh_scales: &[f64], sigma2: f64) -> Result<DetectionBound> {
    check_len(atoms.len(), rayleigh_scales.len())?;
    let order = detection_order(atoms, rayleigh_scales);
    let sorted: Vec<CVector> = order.iter().map(|&i| atoms[i].clone()).collect();
    let scales: Vec<f64> = order.iter().map(|&i| rayleigh_scales[i]).collect();
    let mut out = DetectionBound {
        order,
        a: Vec::new(),
        zeta: Vec::new(),
        auc: Vec::new(),
    };
    for l in 0..sorted.len() {
        let t = expected_terms(&sorted, &scales, sigma2, l)?;
        out.a.push(t.a);
        out.zeta.push(t.zeta);
        out.auc.push(expected_auc_from(t.a_zeta()));
    }
    Ok(out)
}

/// Closed forms for three targets, written in terms of coherences.
pub mod three {
    use super::*;

    pub fn noncentralities(g: [&CVector; 3], alpha: [Complex64; 3], sigma2: f64) -> Result<[f64; 3]> {
        let n1 = g[0].norm_squared();
        let n2 = g[1].norm_squared();
        let n3 = g[2].norm_squared();
        let c12 = coherence(g[0], g[1])?;
        let ct = generalized_coherence(g[0], g[1], g[2])?;
        let mu1 = 4.0 * n1 / sigma2
            * (alpha[0] + alpha[1] * inner(g[0], g[1]) / n1 + alpha[2] * inner(g[0], g[2]) / n1).norm_sqr();
        let cross = (inner(g[1], g[2]) * n1 - inner(g[1], g[0]) * inner(g[0], g[2])) / (n1 * n2 * (1.0 - c12));
        let mu2 = 4.0 * n2 * (1.0 - c12) / sigma2 * (alpha[1] + alpha[2] * cross).norm_sqr();
        let mu3 = 4.0 * n3 * (1.0 - ct) / sigma2 * alpha[2].norm_sqr();
        Ok([mu1, mu2, mu3])
    }

    pub fn expected_pds(g: [&CVector; 3], scales: [f64; 3], sigma2: f64, p_fa: f64) -> Result<[f64; 3]> {
        let n: Vec<f64> = g.iter().map(|v| v.norm_squared()).collect();
        let c12 = coherence(g[0], g[1])?;
        let c13 = coherence(g[0], g[2])?;
        let ct = generalized_coherence(g[0], g[1], g[2])?;
        let cb = breve_coherence(g[0], g[1], g[2])?;
        let s2: Vec<f64> = scales.iter().map(|s| s * s).collect();
        let lp = sigma2 * p_fa.ln();
        let d1 = 4.0 * (s2[0] * n[0] + s2[1] * n[1] * c12 + s2[2] * n[2] * c13) + sigma2;
        let d2 = 4.0 * (s2[1] * n[1] * (1.0 - c12) + s2[2] * n[2] * cb) + sigma2;
        let d3 = 4.0 * s2[2] * n[2] * (1.0 - ct) + sigma2;
        Ok([(lp / d1).exp(), (lp / d2).exp(), (lp / d3).exp()])
    }
}

/// `(angle factor, delay factor)` of the non-RIS coherence between two
/// parameter triples; their product equals the atom coherence.
pub fn nonris_coherence_factors(model: &SignalModel, eta_l: [f64; 3], eta_k: [f64; 3]) -> (f64, f64) {
    let n_u = model.scenario.n_ue() as f64;
    let n = model.scenario.n_subcarriers as f64;
    let a = inner(&model.steering([eta_l[1], eta_l[2]]), &model.steering([eta_k[1], eta_k[2]])).norm_sqr()
        / (n_u * n_u);
    let d = inner(&model.delay(eta_l[0]), &model.delay(eta_k[0])).norm_sqr() / (n * n);
    (a, d)
}

/// `(RIS factor, delay factor)` of the RIS coherence.
pub fn ris_coherence_factors(model: &SignalModel, eta_l: [f64; 5], eta_k: [f64; 5]) -> (f64, f64) {
    let nl = model.schedule.response([eta_l[3], eta_l[4]]);
    let nk = model.schedule.response([eta_k[3], eta_k[4]]);
    let n = model.scenario.n_subcarriers as f64;
    let v = inner(&nl, &nk).norm_sqr() / (nl.norm_squared() * nk.norm_squared());
    let d = inner(&model.delay(eta_l[2]), &model.delay(eta_k[2])).norm_sqr() / (n * n);
    (v, d)
}

/// Squared Dirichlet kernel `|sin(N pi df dtau) / (N sin(pi df dtau))|^2`.
pub fn dirichlet_delay_factor(n: usize, delta_f: f64, dtau: f64) -> f64 {
    let x = std::f64::consts::PI * delta_f * dtau;
    let s = x.sin();
    if s.abs() < 1e-300 {
        return 1.0;
    }
    let r = (n as f64 * x).sin() / (n as f64 * s);
    r * r
}
