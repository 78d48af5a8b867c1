//! Scenario description and the geometric channel-parameter mapping.
//!
//! Conventions used throughout the crate:
//!
//! * Orientations are intrinsic Z-Y-X Euler angles `[yaw, pitch, roll]`, so the
//!   rotation is `Rz(yaw) * Ry(pitch) * Rx(roll)` and maps local to global axes.
//! * Array elements sit in the local y-z plane with the array normal along local x.
//!   Element `(i_az, i_el)` has flat index `i_az * n_el + i_el` and the array is
//!   centred on the device position.
//! * Azimuth is `atan2(y, x)` in `(-pi, pi]`, elevation is `acos(z)` in `[0, pi]`,
//!   both of the unit direction in the local frame.

use nalgebra::{Matrix3, Matrix3xX, SMatrix, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Ratio below which two points are considered coincident (metres).
const COINCIDENT_TOL: f64 = 1e-9;

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Static world description: device states, OFDM numerology, array sizes and
/// the energy budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// `[x, y, z, yaw, pitch, roll]` of the UE.
    pub ue_state: [f64; 6],
    /// `[x, y, z, yaw, pitch, roll]` of the RIS.
    pub ris_state: [f64; 6],
    /// Carrier frequency (Hz).
    pub fc: f64,
    /// Subcarrier spacing (Hz).
    pub delta_f: f64,
    pub n_subcarriers: usize,
    /// Number of OFDM symbols `T`; must be even.
    pub n_symbols: usize,
    /// `(azimuth, elevation)` element counts of the UE array.
    pub ue_array: (usize, usize),
    /// `(azimuth, elevation)` element counts of the RIS.
    pub ris_array: (usize, usize),
    /// Total transmit energy `E_s * N * T * N_u` in dBm.
    pub total_energy_dbm: f64,
    /// Noise power spectral density in dBm/Hz.
    pub noise_psd_dbm: f64,
    /// Ambiguity drop (dB) used to build the resolution region.
    pub ref_th: f64,
    /// RIS element gain exponent.
    pub q0: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::table_one()
    }
}

impl Scenario {
    /// The reference setting: UE at the origin, RIS at `[3, 5, 6]`, 15 GHz,
    /// 75 subcarriers of 120 kHz, 2x2 UE array, 35x35 RIS, 50 symbols.
    pub fn table_one() -> Self {
        Self {
            ue_state: [0.0; 6],
            ris_state: [3.0, 5.0, 6.0, 0.0, 0.0, 0.0],
            fc: 15e9,
            delta_f: 120e3,
            n_subcarriers: 75,
            n_symbols: 50,
            ue_array: (2, 2),
            ris_array: (35, 35),
            total_energy_dbm: 65.0,
            noise_psd_dbm: -166.0,
            ref_th: 0.3,
            q0: 0.285,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_symbols == 0 || self.n_symbols % 2 != 0 {
            return bad("n_symbols must be a positive even number");
        }
        if !(self.fc > 0.0) || !(self.delta_f > 0.0) || self.n_subcarriers == 0 {
            return bad("carrier, subcarrier spacing and subcarrier count must be positive");
        }
        if self.ue_array.0 * self.ue_array.1 == 0 || self.ris_array.0 * self.ris_array.1 == 0 {
            return bad("array sizes must be positive");
        }
        if !(self.ref_th > 0.0) {
            return bad("ref_th must be positive");
        }
        if self.ue_state.iter().chain(&self.ris_state).any(|v| !v.is_finite()) {
            return bad("device states must be finite");
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc
    }

    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.delta_f
    }

    /// Noise power `sigma^2 = N_0 W` (W).
    pub fn noise_var(&self) -> f64 {
        dbm_to_watt(self.noise_psd_dbm) * self.bandwidth()
    }

    /// Energy per subcarrier and symbol, `E_s`.
    pub fn symbol_energy(&self) -> f64 {
        dbm_to_watt(self.total_energy_dbm)
            / (self.n_subcarriers as f64 * self.n_symbols as f64 * self.n_ue() as f64)
    }

    pub fn n_ue(&self) -> usize {
        self.ue_array.0 * self.ue_array.1
    }

    pub fn n_ris(&self) -> usize {
        self.ris_array.0 * self.ris_array.1
    }

    /// Number of distinct RIS profiles `T / 2`.
    pub fn n_profiles(&self) -> usize {
        self.n_symbols / 2
    }

    pub fn ue_position(&self) -> Vector3<f64> {
        Vector3::new(self.ue_state[0], self.ue_state[1], self.ue_state[2])
    }

    pub fn ris_position(&self) -> Vector3<f64> {
        Vector3::new(self.ris_state[0], self.ris_state[1], self.ris_state[2])
    }

    pub fn ue_rotation(&self) -> Matrix3<f64> {
        euler_to_rotation([self.ue_state[3], self.ue_state[4], self.ue_state[5]])
    }

    pub fn ris_rotation(&self) -> Matrix3<f64> {
        euler_to_rotation([self.ris_state[3], self.ris_state[4], self.ris_state[5]])
    }

    /// RIS normal in global coordinates (local x axis).
    pub fn ris_normal(&self) -> Vector3<f64> {
        self.ris_rotation().column(0).into_owned()
    }

    /// UE antenna positions in local coordinates, spacing `lambda / 2`.
    pub fn ue_element_positions(&self) -> Matrix3xX<f64> {
        planar_array(self.ue_array, self.wavelength() / 2.0)
    }

    /// RIS element positions in local coordinates, spacing `lambda / 4`.
    pub fn ris_element_positions(&self) -> Matrix3xX<f64> {
        planar_array(self.ris_array, self.wavelength() / 4.0)
    }
}

fn planar_array((n_az, n_el): (usize, usize), spacing: f64) -> Matrix3xX<f64> {
    let mut p = Matrix3xX::zeros(n_az * n_el);
    let c_az = (n_az as f64 - 1.0) / 2.0;
    let c_el = (n_el as f64 - 1.0) / 2.0;
    for i in 0..n_az {
        for j in 0..n_el {
            let k = i * n_el + j;
            p[(1, k)] = (i as f64 - c_az) * spacing;
            p[(2, k)] = (j as f64 - c_el) * spacing;
        }
    }
    p
}

/// Scatter points and their expected radar cross sections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetSet {
    pub positions: Vec<Vector3<f64>>,
    /// Expected RCS `sigma_rcs^2` (m^2).
    pub rcs: Vec<f64>,
}

impl TargetSet {
    pub fn new(positions: Vec<Vector3<f64>>, rcs: Vec<f64>) -> Result<Self> {
        if positions.len() != rcs.len() {
            return Err(Error::DimensionMismatch {
                expected: positions.len(),
                got: rcs.len(),
            });
        }
        if rcs.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidParameter("rcs must be strictly positive".into()));
        }
        Ok(Self { positions, rcs })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Three-point cluster with angular spacing `delta` around
    /// `(120 ns, 0.7, 0.8)` and expected RCS 50, 5 and 0.5 m^2. The second
    /// and third points sit at `(0.7 + delta, 0.8 - delta)` and
    /// `(0.7 - delta, 0.8 + delta)` with the same delay.
    pub fn cluster(scenario: &Scenario, delta: f64) -> Result<Self> {
        Self::cluster_of(scenario, delta, 3)
    }

    /// The first `n` (1 to 3) points of [`Self::cluster`].
    pub fn cluster_of(scenario: &Scenario, delta: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidParameter("cluster holds one to three points".into()));
        }
        let tau = 120e-9;
        let etas = [
            [tau, 0.7, 0.8],
            [tau, 0.7 + delta, 0.8 - delta],
            [tau, 0.7 - delta, 0.8 + delta],
        ];
        let positions = etas[..n]
            .iter()
            .map(|e| invert_nonris(*e, scenario))
            .collect::<Result<Vec<_>>>()?;
        Self::new(positions, [50.0, 5.0, 0.5][..n].to_vec())
    }
}

/// Channel parameters of one scatter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    /// Round-trip delay of the UE-SP-UE path (s).
    pub tau: f64,
    /// `(azimuth, elevation)` at the UE.
    pub theta: [f64; 2],
    /// Delay of the UE-SP-RIS-UE path (s).
    pub tau_bar: f64,
    /// `(azimuth, elevation)` at the RIS.
    pub phi: [f64; 2],
}

impl TargetParams {
    /// `(tau, theta_az, theta_el)`.
    pub fn nonris(&self) -> [f64; 3] {
        [self.tau, self.theta[0], self.theta[1]]
    }

    /// `(theta_az, theta_el, tau_bar, phi_az, phi_el)`.
    pub fn ris(&self) -> [f64; 5] {
        [self.theta[0], self.theta[1], self.tau_bar, self.phi[0], self.phi[1]]
    }

    /// `(tau, theta_az, theta_el, tau_bar, phi_az, phi_el)`.
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.tau,
            self.theta[0],
            self.theta[1],
            self.tau_bar,
            self.phi[0],
            self.phi[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub targets: Vec<TargetParams>,
    /// UE-RIS-UE round-trip delay.
    pub tau0: f64,
    /// Direction of the RIS seen from the UE.
    pub theta0: [f64; 2],
    /// Direction of the UE seen from the RIS.
    pub phi0: [f64; 2],
}

/// Rotation matrix of intrinsic Z-Y-X Euler angles `[yaw, pitch, roll]`.
pub fn euler_to_rotation(o: [f64; 3]) -> Matrix3<f64> {
    let (sz, cz) = o[0].sin_cos();
    let (sy, cy) = o[1].sin_cos();
    let (sx, cx) = o[2].sin_cos();
    let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    rz * ry * rx
}

/// Unit direction `(azimuth, elevation)` to a local direction vector.
pub fn unit_direction(angles: [f64; 2]) -> Vector3<f64> {
    let (saz, caz) = angles[0].sin_cos();
    let (sel, cel) = angles[1].sin_cos();
    Vector3::new(caz * sel, saz * sel, cel)
}

/// `(azimuth, elevation)` of `target - origin` in the frame rotated by `rot`.
pub fn angles_of(rot: &Matrix3<f64>, origin: &Vector3<f64>, target: &Vector3<f64>) -> Result<[f64; 2]> {
    let d = target - origin;
    let n = d.norm();
    if n < COINCIDENT_TOL {
        return Err(Error::CoincidentGeometry("direction of a point to itself"));
    }
    let local = rot.transpose() * d / n;
    Ok([local.y.atan2(local.x), local.z.clamp(-1.0, 1.0).acos()])
}

/// Channel parameters of one point `c`, i.e. the mapping `h(c)`.
pub fn target_params(scenario: &Scenario, c: &Vector3<f64>) -> Result<TargetParams> {
    let p = scenario.ue_position();
    let pr = scenario.ris_position();
    let d_cu = (c - p).norm();
    let d_rc = (c - pr).norm();
    if d_cu < COINCIDENT_TOL {
        return Err(Error::CoincidentGeometry("target at the UE"));
    }
    if d_rc < COINCIDENT_TOL {
        return Err(Error::CoincidentGeometry("target at the RIS"));
    }
    let d_ur = (p - pr).norm();
    Ok(TargetParams {
        tau: 2.0 * d_cu / SPEED_OF_LIGHT,
        theta: angles_of(&scenario.ue_rotation(), &p, c)?,
        tau_bar: (d_ur + d_rc + d_cu) / SPEED_OF_LIGHT,
        phi: angles_of(&scenario.ris_rotation(), &pr, c)?,
    })
}

pub fn channel_params(scenario: &Scenario, targets: &TargetSet) -> Result<ChannelParams> {
    let p = scenario.ue_position();
    let pr = scenario.ris_position();
    if (p - pr).norm() < COINCIDENT_TOL {
        return Err(Error::CoincidentGeometry("UE at the RIS"));
    }
    let targets = targets
        .positions
        .iter()
        .map(|c| target_params(scenario, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelParams {
        targets,
        tau0: 2.0 * (p - pr).norm() / SPEED_OF_LIGHT,
        theta0: angles_of(&scenario.ue_rotation(), &p, &pr)?,
        phi0: angles_of(&scenario.ris_rotation(), &pr, &p)?,
    })
}

/// Position from the non-RIS triple `(tau, theta_az, theta_el)`.
pub fn invert_nonris(eta: [f64; 3], scenario: &Scenario) -> Result<Vector3<f64>> {
    if !(eta[0] > 0.0) {
        return Err(Error::InvalidParameter("delay must be positive".into()));
    }
    let range = SPEED_OF_LIGHT * eta[0] / 2.0;
    Ok(scenario.ue_position() + range * (scenario.ue_rotation() * unit_direction([eta[1], eta[2]])))
}

/// Position on the RIS ray `phi` whose UE-SP-RIS-UE delay equals `tau_bar`.
pub fn invert_ris(tau_bar: f64, phi: [f64; 2], scenario: &Scenario) -> Result<Vector3<f64>> {
    let p = scenario.ue_position();
    let pr = scenario.ris_position();
    let u = scenario.ris_rotation() * unit_direction(phi);
    let w = pr - p;
    // s + ||w + s u|| = K  =>  s = (K^2 - |w|^2) / (2 (K + w.u))
    let k = SPEED_OF_LIGHT * tau_bar - w.norm();
    let denom = 2.0 * (k + w.dot(&u));
    if !(k > 0.0) || denom.abs() < COINCIDENT_TOL {
        return Err(Error::InvalidParameter("RIS delay too short for the geometry".into()));
    }
    let s = (k * k - w.norm_squared()) / denom;
    if !(s > 0.0) {
        return Err(Error::InvalidParameter("RIS ray does not reach the delay ellipsoid".into()));
    }
    Ok(pr + s * u)
}

/// Amplitudes, Rayleigh scales and complex gains of all paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGains {
    /// `P_alpha0` of the UE-RIS-UE path.
    pub amp_ue_ris: f64,
    pub amp_nonris: Vec<f64>,
    pub amp_ris: Vec<f64>,
    pub rayleigh_scale_nonris: Vec<f64>,
    pub rayleigh_scale_ris: Vec<f64>,
    pub alpha: Vec<Complex64>,
    pub alpha_bar: Vec<Complex64>,
}

impl PathGains {
    /// Deterministic part of the gain model (amplitudes and scales); complex
    /// gains are set to zero until drawn.
    pub fn amplitudes(scenario: &Scenario, targets: &TargetSet) -> Result<Self> {
        let p = scenario.ue_position();
        let pr = scenario.ris_position();
        let n_r = scenario.ris_normal();
        let lambda = scenario.wavelength();
        let e_s = scenario.symbol_energy();
        let four_pi = 4.0 * PI;
        let d_ur = (p - pr).norm();
        if d_ur < COINCIDENT_TOL {
            return Err(Error::CoincidentGeometry("UE at the RIS"));
        }
        // Element pattern magnitude; the RIS reflects from either face.
        let g_ur = ((p - pr).dot(&n_r) / d_ur).abs();
        let amp_ue_ris = (e_s * lambda.powi(4) * g_ur.powf(4.0 * scenario.q0)
            / (four_pi.powi(3) * d_ur.powi(4)))
        .sqrt();

        let mut amp_nonris = Vec::with_capacity(targets.len());
        let mut amp_ris = Vec::with_capacity(targets.len());
        for c in &targets.positions {
            let d_cu = (c - p).norm();
            let d_rc = (c - pr).norm();
            if d_cu < COINCIDENT_TOL || d_rc < COINCIDENT_TOL {
                return Err(Error::CoincidentGeometry("target at the UE or RIS"));
            }
            let g_sr = ((c - pr).dot(&n_r) / d_rc).abs();
            amp_nonris.push((e_s * lambda.powi(2) / (four_pi.powi(3) * d_cu.powi(4))).sqrt());
            amp_ris.push(
                (e_s * lambda.powi(4) * g_ur.powf(2.0 * scenario.q0) * g_sr.powf(2.0 * scenario.q0)
                    / (four_pi.powi(4) * d_ur.powi(2) * d_rc.powi(2) * d_cu.powi(2)))
                .sqrt(),
            );
        }
        let k = (2.0 / PI).sqrt();
        let rayleigh_scale_nonris = amp_nonris
            .iter()
            .zip(&targets.rcs)
            .map(|(a, r)| k * a * r.sqrt())
            .collect();
        let rayleigh_scale_ris = amp_ris
            .iter()
            .zip(&targets.rcs)
            .map(|(a, r)| k * a * r.sqrt())
            .collect();
        let zeros = vec![Complex64::new(0.0, 0.0); targets.len()];
        Ok(Self {
            amp_ue_ris,
            amp_nonris,
            amp_ris,
            rayleigh_scale_nonris,
            rayleigh_scale_ris,
            alpha: zeros.clone(),
            alpha_bar: zeros,
        })
    }

    /// Draw `alpha = P * xi`, `xi ~ CN(0, 4 sigma_rcs^2 / pi)`, independently for both paths.
    pub fn draw<R: Rng + ?Sized>(&mut self, rcs: &[f64], rng: &mut R) {
        let draw = |amp: f64, rcs: f64, rng: &mut R| {
            let s = (2.0 * rcs / PI).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * s, im * s) * amp
        };
        for l in 0..rcs.len() {
            self.alpha[l] = draw(self.amp_nonris[l], rcs[l], rng);
            self.alpha_bar[l] = draw(self.amp_ris[l], rcs[l], rng);
        }
    }
}

/// Amplitudes plus one seeded draw of the complex gains.
pub fn path_gains(scenario: &Scenario, targets: &TargetSet, seed: u64) -> Result<PathGains> {
    let mut g = PathGains::amplitudes(scenario, targets)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    g.draw(&targets.rcs, &mut rng);
    Ok(g)
}

/// Rows `d/dc` of `(tau, theta_az, theta_el, tau_bar, phi_az, phi_el)`.
pub type PositionJacobian = SMatrix<f64, 6, 3>;

fn azimuth_gradient(q: &Matrix3<f64>, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    let rho2 = x.x * x.x + x.y * x.y;
    if rho2 <= 1e-24 * x.norm_squared() {
        return Err(Error::GimbalSingularity);
    }
    Ok((x.x * q.column(1) - x.y * q.column(0)) / rho2)
}

fn elevation_gradient(q: &Matrix3<f64>, x: &Vector3<f64>, d: &Vector3<f64>) -> Result<Vector3<f64>> {
    let r = x.norm();
    let s2 = 1.0 - (x.z / r).powi(2);
    if s2 <= 1e-24 {
        return Err(Error::GimbalSingularity);
    }
    Ok(-(r * r * q.column(2) - x.z * d) / (r.powi(3) * s2.sqrt()))
}

/// Analytic Jacobian of `h(c)` with respect to the position `c`.
pub fn jacobian_position(c: &Vector3<f64>, scenario: &Scenario) -> Result<PositionJacobian> {
    let p = scenario.ue_position();
    let pr = scenario.ris_position();
    let qu = scenario.ue_rotation();
    let qr = scenario.ris_rotation();
    let du = c - p;
    let dr = c - pr;
    if du.norm() < COINCIDENT_TOL || dr.norm() < COINCIDENT_TOL {
        return Err(Error::CoincidentGeometry("target at the UE or RIS"));
    }
    let xu = qu.transpose() * du;
    let xr = qr.transpose() * dr;
    let rows = [
        2.0 * du / (SPEED_OF_LIGHT * du.norm()),
        azimuth_gradient(&qu, &xu)?,
        elevation_gradient(&qu, &xu, &du)?,
        (dr / dr.norm() + du / du.norm()) / SPEED_OF_LIGHT,
        azimuth_gradient(&qr, &xr)?,
        elevation_gradient(&qr, &xr, &dr)?,
    ];
    let mut j = PositionJacobian::zeros();
    for (i, row) in rows.iter().enumerate() {
        j.set_row(i, &row.transpose());
    }
    Ok(j)
}
