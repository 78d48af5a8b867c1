use nalgebra::Matrix3xX;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{angles_of, Scenario};
use crate::linalg::{inner, CMatrix, CVector};

use super::{array_response, array_response_gradient, steering_ue, ResolutionRegion};

/// Unit-norm precoder: conjugate beam at the region's angular centre projected
/// onto the orthogonal complement of the RIS direction, so `a_u(theta_0)^T f = 0`.
pub fn build_precoder(scenario: &Scenario, region: &ResolutionRegion) -> Result<CVector> {
    let theta0 = angles_of(
        &scenario.ue_rotation(),
        &scenario.ue_position(),
        &scenario.ris_position(),
    )?;
    let c = region.center();
    let a0 = steering_ue(theta0, scenario);
    let ac = steering_ue([c[1], c[2]], scenario);
    let n_u = scenario.n_ue() as f64;
    // (I - a0* a0^T / N_u) ac*
    let target = ac.map(|v| v.conj());
    let proj = a0.transpose() * &target;
    let f = &target - a0.map(|v| v.conj()) * (proj[(0, 0)] / n_u);
    let norm = f.norm();
    if norm <= 1e-6 * target.norm() {
        return Err(Error::PrecoderNullConflict);
    }
    Ok(f / Complex64::new(norm, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    /// Matched beam at each cell centre.
    Focused,
    /// Beam widened over its cell by per-element pointing.
    Uniform,
    /// Focused when its half-power width covers the cell, uniform otherwise.
    Auto,
}

/// Time-orthogonal RIS beam sweep over a resolution region.
#[derive(Debug, Clone, PartialEq)]
pub struct RisSchedule {
    /// `omega~_t`, unit-modulus, one per profile.
    pub profiles: Vec<CVector>,
    pub central_angles: Vec<[f64; 2]>,
    pub d_az: usize,
    pub d_el: usize,
    /// Resolved mode (never `Auto`).
    pub mode: ScheduleMode,
    /// Cell widths `(zeta_az, zeta_el)`.
    pub cell: [f64; 2],
    pub phi0: [f64; 2],
    /// Row `t` is `omega~_t ⊙ a_r(phi_0)` so that `nu(phi) = W a_r(phi)`.
    weights: CMatrix,
    elements: Matrix3xX<f64>,
    lambda: f64,
}

impl RisSchedule {
    pub fn n_profiles(&self) -> usize {
        self.profiles.len()
    }

    /// RIS profile applied at OFDM symbol `t` (0-based): `+omega~` then `-omega~`.
    pub fn profile_at_symbol(&self, t: usize) -> CVector {
        let p = &self.profiles[t / 2];
        if t % 2 == 0 {
            p.clone()
        } else {
            -p
        }
    }

    /// `nu(phi)`: entry `t` is `omega~_t^T (a_r(phi) ⊙ a_r(phi_0))`.
    pub fn response(&self, phi: [f64; 2]) -> CVector {
        &self.weights * array_response(&self.elements, phi, self.lambda)
    }

    /// Derivatives of [`Self::response`] w.r.t. `(phi_az, phi_el)`.
    pub fn response_gradient(&self, phi: [f64; 2]) -> [CVector; 2] {
        let [da, de] = array_response_gradient(&self.elements, phi, self.lambda);
        [&self.weights * da, &self.weights * de]
    }

    /// RIS response of an arbitrary profile, without the schedule's sign.
    pub fn response_with(&self, profile: &CVector, phi: [f64; 2], phi_ref: [f64; 2]) -> Complex64 {
        let a = array_response(&self.elements, phi, self.lambda);
        let b = array_response(&self.elements, phi_ref, self.lambda);
        profile
            .iter()
            .zip(a.iter().zip(b.iter()))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// Phases of every profile element as CSV `profile,element,phase`.
    pub fn write_phases_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "profile,element,phase")?;
        for (t, p) in self.profiles.iter().enumerate() {
            for (m, v) in p.iter().enumerate() {
                writeln!(out, "{t},{m},{:.17e}", v.arg())?;
            }
        }
        Ok(())
    }
}

fn focused_profile(elements: &Matrix3xX<f64>, lambda: f64, phi: [f64; 2], phi0: [f64; 2]) -> CVector {
    let a = array_response(elements, phi, lambda);
    let b = array_response(elements, phi0, lambda);
    a.zip_map(&b, |x, y| (x * y).conj())
}

/// Element `m` points at `centre + (u_m zeta_az, v_m zeta_el) / 4` where
/// `(u_m, v_m) in [-1, 1]^2` are its normalized in-plane coordinates; the
/// resulting quadratic phase sweeps the instantaneous direction over the cell.
fn uniform_profile(
    elements: &Matrix3xX<f64>,
    lambda: f64,
    centre: [f64; 2],
    cell: [f64; 2],
    phi0: [f64; 2],
) -> CVector {
    let ymax = elements.row(1).amax();
    let zmax = elements.row(2).amax();
    let norm = |v: f64, m: f64| if m > 0.0 { v / m } else { 0.0 };
    CVector::from_iterator(
        elements.ncols(),
        elements.column_iter().map(|p| {
            let chi = [
                centre[0] + norm(p[1], ymax) * cell[0] / 4.0,
                centre[1] + norm(p[2], zmax) * cell[1] / 4.0,
            ];
            let k = super::wavenumber(chi, lambda) + super::wavenumber(phi0, lambda);
            Complex64::from_polar(1.0, -p.dot(&k))
        }),
    )
}

/// Cell-centre sweep over the RIS-angle box of `region`. Profile `t` (0-based)
/// points at azimuth index `t mod d_az` and elevation index `t / d_az`.
pub fn build_schedule(
    scenario: &Scenario,
    region: &ResolutionRegion,
    d_az: usize,
    d_el: usize,
    mode: ScheduleMode,
) -> Result<RisSchedule> {
    let t_tilde = scenario.n_profiles();
    if d_az * d_el != t_tilde {
        return Err(Error::DimensionMismatch {
            expected: t_tilde,
            got: d_az * d_el,
        });
    }
    let phi0 = angles_of(
        &scenario.ris_rotation(),
        &scenario.ris_position(),
        &scenario.ue_position(),
    )?;
    let elements = scenario.ris_element_positions();
    let lambda = scenario.wavelength();
    let [az_lo, az_hi] = region.ris_az_interval;
    let [el_lo, el_hi] = region.ris_el_interval;
    let cell = [(az_hi - az_lo) / d_az as f64, (el_hi - el_lo) / d_el as f64];
    let central_angles: Vec<[f64; 2]> = (0..t_tilde)
        .map(|t| {
            let i = (t % d_az) as f64;
            let j = (t / d_az) as f64;
            [az_lo + cell[0] / 2.0 + i * cell[0], el_lo + cell[1] / 2.0 + j * cell[1]]
        })
        .collect();

    let focused: Vec<CVector> = central_angles
        .iter()
        .map(|&c| focused_profile(&elements, lambda, c, phi0))
        .collect();
    let resolved = match mode {
        ScheduleMode::Auto => {
            if focused_covers_cells(&elements, lambda, &focused, &central_angles, cell, phi0) {
                ScheduleMode::Focused
            } else {
                ScheduleMode::Uniform
            }
        }
        m => m,
    };
    let profiles = match resolved {
        ScheduleMode::Uniform => central_angles
            .iter()
            .map(|&c| uniform_profile(&elements, lambda, c, cell, phi0))
            .collect(),
        _ => focused,
    };
    let a0 = array_response(&elements, phi0, lambda);
    let mut weights = CMatrix::zeros(t_tilde, elements.ncols());
    for (t, p) in profiles.iter().enumerate() {
        for m in 0..elements.ncols() {
            weights[(t, m)] = p[m] * a0[m];
        }
    }
    Ok(RisSchedule {
        profiles,
        central_angles,
        d_az,
        d_el,
        mode: resolved,
        cell,
        phi0,
        weights,
        elements,
        lambda,
    })
}

fn focused_covers_cells(
    elements: &Matrix3xX<f64>,
    lambda: f64,
    profiles: &[CVector],
    centres: &[[f64; 2]],
    cell: [f64; 2],
    phi0: [f64; 2],
) -> bool {
    let n_r = elements.ncols() as f64;
    let b = array_response(elements, phi0, lambda);
    let half_power = n_r / std::f64::consts::SQRT_2;
    profiles.iter().zip(centres).all(|(p, c)| {
        let edges = [
            [c[0] - cell[0] / 2.0, c[1]],
            [c[0] + cell[0] / 2.0, c[1]],
            [c[0], c[1] - cell[1] / 2.0],
            [c[0], c[1] + cell[1] / 2.0],
        ];
        edges.iter().all(|&e| {
            let a = array_response(elements, e, lambda);
            let ab = a.component_mul(&b);
            inner(&p.map(|v| v.conj()), &ab).norm() >= half_power
        })
    })
}

/// `min_phi max_t |nu_t(phi)| / N_r` over an `n x n` lattice spanning the
/// region's RIS-angle box.
pub fn coverage_floor(schedule: &RisSchedule, region: &ResolutionRegion, n: usize) -> f64 {
    let n_r = schedule.elements.ncols() as f64;
    let lin = |iv: [f64; 2], i: usize| {
        if n == 1 {
            0.5 * (iv[0] + iv[1])
        } else {
            iv[0] + (iv[1] - iv[0]) * i as f64 / (n - 1) as f64
        }
    };
    let mut floor = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let phi = [lin(region.ris_az_interval, i), lin(region.ris_el_interval, j)];
            let best = schedule.response(phi).camax();
            floor = floor.min(best / n_r);
        }
    }
    floor
}
