//! Array responses, precoder and RIS schedule design, resolution regions and
//! synthesis of the separated non-RIS / RIS observation streams.
//!
//! All stacked vectors use the layout `symbol -> subcarrier -> antenna`, i.e.
//! entry `(t, n, k)` sits at `(t * N + n) * N_u + k`.

mod design;
mod model;
mod region;

pub use design::{build_precoder, build_schedule, coverage_floor, RisSchedule, ScheduleMode};
pub use model::{SignalBlock, SignalModel};
pub use region::{AmbiguityGrid, ResolutionRegion};

use nalgebra::{Matrix3xX, Vector3};
use num_complex::Complex64;

use crate::geometry::{unit_direction, Scenario};
use crate::linalg::{inner, kron3, CVector};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Wavenumber vector `2 pi / lambda * u(angles)`.
pub fn wavenumber(angles: [f64; 2], lambda: f64) -> Vector3<f64> {
    unit_direction(angles) * (2.0 * std::f64::consts::PI / lambda)
}

/// Partial derivatives of the wavenumber vector w.r.t. azimuth and elevation.
pub fn wavenumber_gradient(angles: [f64; 2], lambda: f64) -> [Vector3<f64>; 2] {
    let s = 2.0 * std::f64::consts::PI / lambda;
    let (saz, caz) = angles[0].sin_cos();
    let (sel, cel) = angles[1].sin_cos();
    [
        Vector3::new(-saz * sel, caz * sel, 0.0) * s,
        Vector3::new(caz * cel, saz * cel, -sel) * s,
    ]
}

/// `exp(j P^T k(angles))` for element positions `P` (3 x M).
pub fn array_response(elements: &Matrix3xX<f64>, angles: [f64; 2], lambda: f64) -> CVector {
    let k = wavenumber(angles, lambda);
    CVector::from_iterator(
        elements.ncols(),
        elements.column_iter().map(|p| Complex64::from_polar(1.0, p.dot(&k))),
    )
}

/// Derivatives of [`array_response`] w.r.t. `(azimuth, elevation)`.
pub fn array_response_gradient(
    elements: &Matrix3xX<f64>,
    angles: [f64; 2],
    lambda: f64,
) -> [CVector; 2] {
    let a = array_response(elements, angles, lambda);
    let dk = wavenumber_gradient(angles, lambda);
    let grad = |d: &Vector3<f64>| {
        CVector::from_iterator(
            a.len(),
            elements
                .column_iter()
                .zip(a.iter())
                .map(|(p, ai)| ai * J * p.dot(d)),
        )
    };
    [grad(&dk[0]), grad(&dk[1])]
}

pub fn steering_ue(theta: [f64; 2], scenario: &Scenario) -> CVector {
    array_response(&scenario.ue_element_positions(), theta, scenario.wavelength())
}

pub fn steering_ris(phi: [f64; 2], scenario: &Scenario) -> CVector {
    array_response(&scenario.ris_element_positions(), phi, scenario.wavelength())
}

/// `d_n(tau) = exp(-j 2 pi n tau delta_f)`, `n = 0..N-1`.
pub fn delay_response(tau: f64, n: usize, delta_f: f64) -> CVector {
    let w = -2.0 * std::f64::consts::PI * tau * delta_f;
    CVector::from_iterator(n, (0..n).map(|i| Complex64::from_polar(1.0, w * i as f64)))
}

pub fn delay_response_derivative(tau: f64, n: usize, delta_f: f64) -> CVector {
    let d = delay_response(tau, n, delta_f);
    let w = -2.0 * std::f64::consts::PI * delta_f;
    CVector::from_iterator(n, d.iter().enumerate().map(|(i, di)| di * J * (w * i as f64)))
}

/// A vector of the form `scale * (time ⊗ freq ⊗ space)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KronAtom {
    pub scale: Complex64,
    pub time: CVector,
    pub freq: CVector,
    pub space: CVector,
}

impl KronAtom {
    pub fn materialize(&self) -> CVector {
        kron3(&self.time, &self.freq, &self.space) * self.scale
    }

    pub fn norm_squared(&self) -> f64 {
        self.scale.norm_sqr()
            * self.time.norm_squared()
            * self.freq.norm_squared()
            * self.space.norm_squared()
    }

    /// `<self, other>` without materializing either vector.
    pub fn inner(&self, other: &KronAtom) -> Complex64 {
        self.scale.conj()
            * other.scale
            * inner(&self.time, &other.time)
            * inner(&self.freq, &other.freq)
            * inner(&self.space, &other.space)
    }
}
