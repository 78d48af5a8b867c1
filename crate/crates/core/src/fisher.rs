//! Fisher information of the non-RIS and RIS streams conditioned on the path
//! gains, the derived delay / angle / position error bounds and the two-target
//! equivalent Fisher information.
//!
//! Parameter ordering is parameter-major:
//!
//! * non-RIS (`5L`): `Re alpha_1..L, Im alpha_1..L, tau_1..L, theta_az_1..L, theta_el_1..L`
//! * RIS (`7L`): `Re a_1..L, Im a_1..L, theta_az_1..L, theta_el_1..L, tau_bar_1..L, phi_az_1..L, phi_el_1..L`
//!
//! so the delay of target `l` (0-based) sits at `2L + l` in the non-RIS FIM
//! and at `4L + l` in the RIS FIM.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::detection::coherence;
use crate::error::{Error, Result};
use crate::geometry::{jacobian_position, ChannelParams, PositionJacobian, TargetParams};
use crate::linalg::{inner, invert_spd, CMatrix, CVector, PsdInverse, RANK_TOL};
use crate::signal::{KronAtom, SignalModel};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Atom of a non-RIS path and its derivatives w.r.t. `(tau, theta_az, theta_el)`.
#[derive(Debug, Clone)]
pub struct NonRisDerivatives {
    pub g: CVector,
    pub d_tau: CVector,
    pub d_az: CVector,
    pub d_el: CVector,
}

impl NonRisDerivatives {
    fn vectors(&self) -> [&CVector; 4] {
        [&self.g, &self.d_tau, &self.d_az, &self.d_el]
    }
}

/// Atom of a RIS path and its derivatives w.r.t.
/// `(theta_az, theta_el, tau_bar, phi_az, phi_el)`.
#[derive(Debug, Clone)]
pub struct RisDerivatives {
    pub g: CVector,
    pub d_theta: [CVector; 2],
    pub d_tau: CVector,
    pub d_phi: [CVector; 2],
}

impl RisDerivatives {
    fn vectors(&self) -> [&CVector; 6] {
        [
            &self.g,
            &self.d_theta[0],
            &self.d_theta[1],
            &self.d_tau,
            &self.d_phi[0],
            &self.d_phi[1],
        ]
    }
}

pub fn atom_derivatives_nonris(model: &SignalModel, eta: [f64; 3]) -> NonRisDerivatives {
    let theta = [eta[1], eta[2]];
    let base = model.nonris_factors(eta);
    let dp = model.precoder_gain_gradient(theta);
    let da = model.steering_gradient(theta);
    let angle = |k: usize| {
        let space = &da[k] * base.scale + &base.space * dp[k];
        KronAtom {
            scale: Complex64::new(1.0, 0.0),
            time: base.time.clone(),
            freq: base.freq.clone(),
            space,
        }
        .materialize()
    };
    let d_tau = KronAtom {
        freq: model.delay_derivative(eta[0]),
        ..base.clone()
    }
    .materialize();
    NonRisDerivatives {
        g: base.materialize(),
        d_tau,
        d_az: angle(0),
        d_el: angle(1),
    }
}

pub fn atom_derivatives_ris(model: &SignalModel, eta: [f64; 5]) -> RisDerivatives {
    let base = model.ris_factors(eta);
    let dp = model.precoder_gain_gradient([eta[0], eta[1]]);
    let dnu = model.schedule.response_gradient([eta[3], eta[4]]);
    let with_scale = |s: Complex64| KronAtom { scale: s, ..base.clone() }.materialize();
    let with_time = |t: &CVector| {
        KronAtom {
            time: t.clone(),
            ..base.clone()
        }
        .materialize()
    };
    RisDerivatives {
        g: base.materialize(),
        d_theta: [with_scale(dp[0]), with_scale(dp[1])],
        d_tau: KronAtom {
            freq: model.delay_derivative(eta[2]),
            ..base.clone()
        }
        .materialize(),
        d_phi: [with_time(&dnu[0]), with_time(&dnu[1])],
    }
}

/// `[F]_ij = 4 / sigma2 * Re{c_i^H c_j}` for derivative columns `c_i`.
pub fn fim(columns: &[CVector], sigma2: f64) -> DMatrix<f64> {
    let n = columns.len();
    let mut f = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = 4.0 / sigma2 * inner(&columns[i], &columns[j]).re;
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    f
}

/// Derivative columns `d mu^n / d eta~^n` in the frozen ordering.
pub fn nonris_columns(derivs: &[NonRisDerivatives], alpha: &[Complex64]) -> Vec<CVector> {
    let mut cols = Vec::with_capacity(5 * derivs.len());
    cols.extend(derivs.iter().map(|d| d.g.clone()));
    cols.extend(derivs.iter().map(|d| &d.g * J));
    for k in 1..4 {
        cols.extend(derivs.iter().zip(alpha).map(|(d, a)| d.vectors()[k] * *a));
    }
    cols
}

/// Derivative columns `d mu^r / d eta~^r` in the frozen ordering.
pub fn ris_columns(derivs: &[RisDerivatives], alpha_bar: &[Complex64]) -> Vec<CVector> {
    let mut cols = Vec::with_capacity(7 * derivs.len());
    cols.extend(derivs.iter().map(|d| d.g.clone()));
    cols.extend(derivs.iter().map(|d| &d.g * J));
    for k in 1..6 {
        cols.extend(derivs.iter().zip(alpha_bar).map(|(d, a)| d.vectors()[k] * *a));
    }
    cols
}

fn gram(vectors: &[&CVector]) -> CMatrix {
    let n = vectors.len();
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = inner(vectors[i], vectors[j]);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}

/// FIM from the Gram matrix of the unscaled vectors: column `i` of the
/// derivative matrix is `coef_i * v_{index_i}`.
fn assemble(gram: &CMatrix, map: &[(usize, Complex64)], sigma2: f64) -> DMatrix<f64> {
    let n = map.len();
    let mut f = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (ki, ci) = map[i];
            let (kj, cj) = map[j];
            let v = 4.0 / sigma2 * (ci.conj() * cj * gram[(ki, kj)]).re;
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    f
}

/// `(vector index, coefficient)` per FIM column for `per` vectors per target
/// stored target-major as `l * per + k`, vector 0 being the atom.
fn column_map(gains: &[Complex64], per: usize) -> Vec<(usize, Complex64)> {
    let l = gains.len();
    let one = Complex64::new(1.0, 0.0);
    let mut map = Vec::with_capacity((per + 1) * l);
    map.extend((0..l).map(|i| (i * per, one)));
    map.extend((0..l).map(|i| (i * per, J)));
    for k in 1..per {
        map.extend((0..l).map(|i| (i * per + k, gains[i])));
    }
    map
}

fn sub_block(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Equivalent FIM of the parameters `keep` with all other parameters treated
/// as nuisance: the Schur complement `F_kk - F_kn F_nn^+ F_nk`, equal to the
/// inverse of the `keep` block of `F^-1` whenever `F` is invertible.
pub fn efim(f: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    let nuisance: Vec<usize> = (0..f.nrows()).filter(|i| !keep.contains(i)).collect();
    let fkk = sub_block(f, keep);
    if nuisance.is_empty() {
        return fkk;
    }
    let g = PsdInverse::new(&sub_block(f, &nuisance)).inverse;
    let fkn = DMatrix::from_fn(keep.len(), nuisance.len(), |i, j| f[(keep[i], nuisance[j])]);
    let e = &fkk - &fkn * g * fkn.transpose();
    (&e + e.transpose()) * 0.5
}

/// Position Jacobian `T` for `L` targets: row `p * L + l` holds the gradient of
/// parameter `rows[p]` of target `l`, placed in columns `3l..3l+3`.
fn stacked_jacobian(jacobians: &[PositionJacobian], rows: &[usize]) -> DMatrix<f64> {
    let l = jacobians.len();
    let mut t = DMatrix::zeros(rows.len() * l, 3 * l);
    for (p, &r) in rows.iter().enumerate() {
        for (i, jac) in jacobians.iter().enumerate() {
            for c in 0..3 {
                t[(p * l + i, 3 * i + c)] = jac[(r, c)];
            }
        }
    }
    t
}

fn peb(f_euc: &DMatrix<f64>, l: usize) -> Vec<f64> {
    let p = PsdInverse::new(f_euc);
    (0..l)
        .map(|i| (p.variance(3 * i) + p.variance(3 * i + 1) + p.variance(3 * i + 2)).sqrt())
        .collect()
}

/// Per-stream bounds from the FIM over `(Re a, Im a, p_1, p_2, p_3)` blocks.
struct StreamBounds {
    deb: Vec<f64>,
    aeb: Vec<f64>,
    fim_euc: DMatrix<f64>,
    peb: Vec<f64>,
    rank_deficient: bool,
}

fn stream_bounds(f: &DMatrix<f64>, jacobians: &[PositionJacobian], rows: [usize; 3]) -> StreamBounds {
    let l = jacobians.len();
    let geo: Vec<usize> = (2 * l..5 * l).collect();
    let e = efim(f, &geo);
    let inv = PsdInverse::new(&e);
    let deb = (0..l).map(|i| inv.variance(i).sqrt()).collect();
    let aeb = (0..l)
        .map(|i| (inv.variance(l + i) + inv.variance(2 * l + i)).sqrt())
        .collect();
    let t = stacked_jacobian(jacobians, &rows);
    let fim_euc = t.transpose() * e * t;
    let peb = peb(&fim_euc, l);
    StreamBounds {
        deb,
        aeb,
        fim_euc,
        peb,
        rank_deficient: inv.rank_deficient,
    }
}

/// Fisher matrices and error bounds for one gain realization.
#[derive(Debug, Clone, Serialize)]
pub struct FisherReport {
    pub fim_nonris: DMatrix<f64>,
    pub fim_ris: DMatrix<f64>,
    /// Delay error bounds (s).
    pub deb_n: Vec<f64>,
    pub deb_r: Vec<f64>,
    /// Angle error bounds (rad).
    pub aeb_n: Vec<f64>,
    pub aeb_r: Vec<f64>,
    /// Position error bounds (m).
    pub peb_n: Vec<f64>,
    pub peb_r: Vec<f64>,
    pub peb_joint: Vec<f64>,
    pub fim_euc_n: DMatrix<f64>,
    pub fim_euc_r: DMatrix<f64>,
    pub fim_euc_joint: DMatrix<f64>,
    /// The non-RIS equivalent FIM of the geometric parameters is rank
    /// deficient (condition number beyond the guard). Bounds of parameters
    /// outside its range are infinite; the others use the pseudo-inverse.
    pub singular_nonris: bool,
    /// Same for the RIS stream with the UE angles removed.
    pub singular_ris: bool,
    /// Information on the RIS-stream UE angles left after removing what the
    /// gain parameters explain (trace of the Schur complement). The UE angles
    /// only enter the RIS atom through the precoder gain, so this is zero up
    /// to rounding and the angles are dropped before inversion.
    pub ris_theta_information: f64,
}

/// Bounds from the two conditional FIMs and the per-target position
/// Jacobians.
pub fn bounds(
    fim_nonris: DMatrix<f64>,
    fim_ris: DMatrix<f64>,
    jacobians: &[PositionJacobian],
) -> Result<FisherReport> {
    let l = jacobians.len();
    if fim_nonris.nrows() != 5 * l {
        return Err(Error::DimensionMismatch {
            expected: 5 * l,
            got: fim_nonris.nrows(),
        });
    }
    if fim_ris.nrows() != 7 * l {
        return Err(Error::DimensionMismatch {
            expected: 7 * l,
            got: fim_ris.nrows(),
        });
    }
    let n = stream_bounds(&fim_nonris, jacobians, [0, 1, 2]);

    // Drop the UE-angle rows and columns of the RIS FIM.
    let gains: Vec<usize> = (0..2 * l).collect();
    let kept: Vec<usize> = gains.iter().copied().chain(4 * l..7 * l).collect();
    let theta: Vec<usize> = (2 * l..4 * l).collect();
    let ris_theta_information = theta_residual(&fim_ris, &gains, &theta);
    let r = stream_bounds(&sub_block(&fim_ris, &kept), jacobians, [3, 4, 5]);

    let fim_euc_joint = &n.fim_euc + &r.fim_euc;
    let peb_joint = peb(&fim_euc_joint, l);
    Ok(FisherReport {
        fim_nonris,
        fim_ris,
        deb_n: n.deb,
        deb_r: r.deb,
        aeb_n: n.aeb,
        aeb_r: r.aeb,
        peb_n: n.peb,
        peb_r: r.peb,
        peb_joint,
        fim_euc_n: n.fim_euc,
        fim_euc_r: r.fim_euc,
        fim_euc_joint,
        singular_nonris: n.rank_deficient,
        singular_ris: r.rank_deficient,
        ris_theta_information,
    })
}

fn theta_residual(f: &DMatrix<f64>, gains: &[usize], theta: &[usize]) -> f64 {
    let idx: Vec<usize> = gains.iter().chain(theta).copied().collect();
    let keep: Vec<usize> = (gains.len()..idx.len()).collect();
    efim(&sub_block(f, &idx), &keep).trace().max(0.0)
}

/// Gain-independent part of the Fisher analysis of one scene: Gram matrices of
/// all atoms and derivatives plus the position Jacobians. Evaluating a new
/// gain draw only reassembles small matrices.
#[derive(Debug, Clone)]
pub struct FisherGeometry {
    n_targets: usize,
    gram_nonris: CMatrix,
    gram_ris: CMatrix,
    jacobians: Vec<PositionJacobian>,
}

impl FisherGeometry {
    pub fn new(model: &SignalModel, params: &ChannelParams, positions: &[Vector3<f64>]) -> Result<Self> {
        let l = params.targets.len();
        if positions.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: positions.len(),
            });
        }
        let dn: Vec<NonRisDerivatives> = params
            .targets
            .iter()
            .map(|p| atom_derivatives_nonris(model, p.nonris()))
            .collect();
        let dr: Vec<RisDerivatives> = params
            .targets
            .iter()
            .map(|p| atom_derivatives_ris(model, p.ris()))
            .collect();
        let vn: Vec<&CVector> = dn.iter().flat_map(|d| d.vectors()).collect();
        let vr: Vec<&CVector> = dr.iter().flat_map(|d| d.vectors()).collect();
        let jacobians = positions
            .iter()
            .map(|c| jacobian_position(c, &model.scenario))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_targets: l,
            gram_nonris: gram(&vn),
            gram_ris: gram(&vr),
            jacobians,
        })
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn jacobians(&self) -> &[PositionJacobian] {
        &self.jacobians
    }

    pub fn fim_nonris(&self, alpha: &[Complex64], sigma2: f64) -> DMatrix<f64> {
        assert_eq!(alpha.len(), self.n_targets);
        assemble(&self.gram_nonris, &column_map(alpha, 4), sigma2)
    }

    pub fn fim_ris(&self, alpha_bar: &[Complex64], sigma2: f64) -> DMatrix<f64> {
        assert_eq!(alpha_bar.len(), self.n_targets);
        assemble(&self.gram_ris, &column_map(alpha_bar, 6), sigma2)
    }

    pub fn report(&self, alpha: &[Complex64], alpha_bar: &[Complex64], sigma2: f64) -> Result<FisherReport> {
        if alpha.len() != self.n_targets || alpha_bar.len() != self.n_targets {
            return Err(Error::DimensionMismatch {
                expected: self.n_targets,
                got: alpha.len().min(alpha_bar.len()),
            });
        }
        bounds(self.fim_nonris(alpha, sigma2), self.fim_ris(alpha_bar, sigma2), &self.jacobians)
    }
}

/// EFIM of `(tau, theta_az, theta_el)` of all non-RIS paths (parameter-major,
/// `3L x 3L`) with the gains as nuisance.
pub fn efim_nonris(model: &SignalModel, etas: &[[f64; 3]], alpha: &[Complex64], sigma2: f64) -> DMatrix<f64> {
    let l = etas.len();
    let d: Vec<NonRisDerivatives> = etas.iter().map(|e| atom_derivatives_nonris(model, *e)).collect();
    let f = fim(&nonris_columns(&d, alpha), sigma2);
    efim(&f, &(2 * l..5 * l).collect::<Vec<_>>())
}

/// EFIM of `(tau_bar, phi_az, phi_el)` of all RIS paths (parameter-major,
/// `3L x 3L`) with the gains as nuisance and the UE angles dropped.
pub fn efim_ris(model: &SignalModel, etas: &[[f64; 5]], alpha_bar: &[Complex64], sigma2: f64) -> DMatrix<f64> {
    let l = etas.len();
    let d: Vec<RisDerivatives> = etas.iter().map(|e| atom_derivatives_ris(model, *e)).collect();
    let f = fim(&ris_columns(&d, alpha_bar), sigma2);
    let kept: Vec<usize> = (0..2 * l).chain(4 * l..7 * l).collect();
    efim(&sub_block(&f, &kept), &(2 * l..5 * l).collect::<Vec<_>>())
}

/// Which parameter of the two-target case study is examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseStudyParam {
    /// `theta_az` of the non-RIS stream.
    NonRisAzimuth,
    /// `phi_az` of the RIS stream.
    RisAzimuth,
}

/// Closed-form equivalent Fisher information of the first target's angle
/// and its two information-loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalentFim {
    pub value: f64,
    /// Loss from the unknown gains, `C~(g1, g2, g_d1)`.
    pub il_alpha: f64,
    /// Loss from the unknown angle of the second target.
    pub il_second: f64,
}

/// Equivalent Fisher information of the first target's angle when the gains
/// of both targets and the second target's angle are unknown and everything
/// else is known.
///
/// `g` are the atoms, `gd` the atom derivatives w.r.t. each target's own
/// angle. Coinciding atoms give zero information.
pub fn equivalent_fim(g: [&CVector; 2], gd: [&CVector; 2], alpha: [Complex64; 2], sigma2: f64) -> Result<EquivalentFim> {
    let [g1, g2] = g;
    let [d1, d2] = gd;
    let c12 = coherence(g1, g2)?;
    if 1.0 - c12 <= RANK_TOL {
        return Ok(EquivalentFim {
            value: 0.0,
            il_alpha: 1.0,
            il_second: 0.0,
        });
    }
    let det = g1.norm_squared() * g2.norm_squared() * (1.0 - c12);
    // x_i = g2 <g1, d_i> - g1 <g2, d_i> with the product linear in its first
    // slot; <x1, x2> is then x2^H x1 while the derivative product is d1^H d2.
    let x = |d: &CVector| g2 * inner(d, g1) - g1 * inner(d, g2);
    let x1 = x(d1);
    let x2 = x(d2);
    let n1 = d1.norm_squared();
    let n2 = d2.norm_squared();
    let il_alpha = if n1 > 0.0 { x1.norm_squared() / (det * n1) } else { 0.0 };
    let resid2 = n2 - x2.norm_squared() / det;
    let il_second = if resid2 * alpha[1].norm_sqr() > 0.0 {
        let cross = inner(d1, d2) - inner(&x2, &x1) / det;
        (alpha[0].conj() * alpha[1] * cross).re.powi(2) / (alpha[1].norm_sqr() * resid2)
    } else {
        0.0
    };
    let value = (4.0 / sigma2 * (alpha[0].norm_sqr() * n1 * (1.0 - il_alpha) - il_second)).max(0.0);
    Ok(EquivalentFim {
        value,
        il_alpha,
        il_second,
    })
}

/// Two-target case study evaluated on the model's atoms.
pub fn equivalent_fim_case_study(
    model: &SignalModel,
    which: CaseStudyParam,
    targets: [&TargetParams; 2],
    alpha: [Complex64; 2],
    sigma2: f64,
) -> Result<EquivalentFim> {
    match which {
        CaseStudyParam::NonRisAzimuth => {
            let d: Vec<NonRisDerivatives> = targets
                .iter()
                .map(|t| atom_derivatives_nonris(model, t.nonris()))
                .collect();
            equivalent_fim([&d[0].g, &d[1].g], [&d[0].d_az, &d[1].d_az], alpha, sigma2)
        }
        CaseStudyParam::RisAzimuth => {
            let d: Vec<RisDerivatives> = targets.iter().map(|t| atom_derivatives_ris(model, t.ris())).collect();
            equivalent_fim([&d[0].g, &d[1].g], [&d[0].d_phi[0], &d[1].d_phi[0]], alpha, sigma2)
        }
    }
}

/// Schur complement of the 6x6 FIM `(Re a, Im a, angle)` of two targets onto
/// the first target's angle.
pub fn equivalent_fim_schur(g: [&CVector; 2], gd: [&CVector; 2], alpha: [Complex64; 2], sigma2: f64) -> Option<f64> {
    let cols = vec![
        g[0].clone(),
        g[1].clone(),
        g[0] * J,
        g[1] * J,
        gd[0] * alpha[0],
        gd[1] * alpha[1],
    ];
    let f = fim(&cols, sigma2);
    let idx: Vec<usize> = vec![0, 1, 2, 3, 5];
    let fnn = sub_block(&f, &idx);
    let inv = invert_spd(&fnn)?;
    let b = DMatrix::from_fn(5, 1, |i, _| f[(4, idx[i])]);
    Some(f[(4, 4)] - (b.transpose() * inv * &b)[(0, 0)])
}
