use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{invert_nonris, target_params, Scenario};
use crate::linalg::inner;

use super::{delay_response, steering_ue};

/// Delay-angle box around a target cluster together with its image in the
/// RIS parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRegion {
    pub delay_interval: [f64; 2],
    pub az_interval: [f64; 2],
    pub el_interval: [f64; 2],
    pub ris_az_interval: [f64; 2],
    pub ris_el_interval: [f64; 2],
    /// Range of the UE-SP-RIS-UE delay over the region.
    pub ris_delay_interval: [f64; 2],
}

/// Sampling of the ambiguity function around a detection peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityGrid {
    pub samples_per_bin: usize,
    pub extent_bins: f64,
}

impl Default for AmbiguityGrid {
    fn default() -> Self {
        Self {
            samples_per_bin: 3,
            extent_bins: 3.0,
        }
    }
}

/// Samples per axis used when mapping a box into RIS coordinates.
const IMAGE_SAMPLES: usize = 7;

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

fn valid_interval(iv: [f64; 2], name: &str) -> Result<()> {
    if !(iv[0].is_finite() && iv[1].is_finite() && iv[0] < iv[1]) {
        return Err(Error::InvalidParameter(format!("{name} interval must be non-empty")));
    }
    Ok(())
}

impl ResolutionRegion {
    /// Region from explicit non-RIS intervals; the RIS intervals are the
    /// bounding box of the image of a sample lattice over the region.
    pub fn fixed(
        scenario: &Scenario,
        delay: [f64; 2],
        az: [f64; 2],
        el: [f64; 2],
    ) -> Result<Self> {
        valid_interval(delay, "delay")?;
        valid_interval(az, "azimuth")?;
        valid_interval(el, "elevation")?;
        if delay[0] <= 0.0 || el[0] <= 0.0 || el[1] >= std::f64::consts::PI {
            return Err(Error::InvalidParameter("region outside the parameter domain".into()));
        }
        let mut phi_az = [f64::INFINITY, f64::NEG_INFINITY];
        let mut phi_el = [f64::INFINITY, f64::NEG_INFINITY];
        let mut tau_bar = [f64::INFINITY, f64::NEG_INFINITY];
        for t in linspace(delay[0], delay[1], IMAGE_SAMPLES) {
            for a in linspace(az[0], az[1], IMAGE_SAMPLES) {
                for e in linspace(el[0], el[1], IMAGE_SAMPLES) {
                    let c = invert_nonris([t, a, e], scenario)?;
                    let p = target_params(scenario, &c)?;
                    phi_az = [phi_az[0].min(p.phi[0]), phi_az[1].max(p.phi[0])];
                    phi_el = [phi_el[0].min(p.phi[1]), phi_el[1].max(p.phi[1])];
                    tau_bar = [tau_bar[0].min(p.tau_bar), tau_bar[1].max(p.tau_bar)];
                }
            }
        }
        Ok(Self {
            delay_interval: delay,
            az_interval: az,
            el_interval: el,
            ris_az_interval: phi_az,
            ris_el_interval: phi_el,
            ris_delay_interval: tau_bar,
        })
    }

    /// The reference box `[112, 128] ns x [0.55, 0.85] x [0.65, 0.95]`.
    pub fn reference(scenario: &Scenario) -> Result<Self> {
        Self::fixed(scenario, [112e-9, 128e-9], [0.55, 0.85], [0.65, 0.95])
    }

    /// Bounding box of the points whose normalized delay-angle ambiguity with
    /// the detection `peak` lies within `scenario.ref_th` dB of the peak value.
    /// Each retained sample contributes its whole grid cell.
    pub fn from_ambiguity(scenario: &Scenario, peak: [f64; 3], grid: AmbiguityGrid) -> Result<Self> {
        if grid.samples_per_bin == 0 || !(grid.extent_bins > 0.0) {
            return Err(Error::InvalidParameter("ambiguity grid must be non-empty".into()));
        }
        let n = scenario.n_subcarriers;
        let bins = [
            1.0 / scenario.bandwidth(),
            2.0 / scenario.ue_array.0 as f64,
            2.0 / scenario.ue_array.1 as f64,
        ];
        let half = (grid.extent_bins * grid.samples_per_bin as f64).round() as i64;
        let steps: Vec<f64> = bins.iter().map(|b| b / grid.samples_per_bin as f64).collect();
        let axis = |k: usize| -> Vec<f64> {
            (-half..=half).map(|i| peak[k] + i as f64 * steps[k]).collect()
        };
        let taus: Vec<f64> = axis(0).into_iter().filter(|&t| t > 0.0).collect();
        let azs = axis(1);
        let els: Vec<f64> = axis(2)
            .into_iter()
            .filter(|&e| e > 0.0 && e < std::f64::consts::PI)
            .collect();

        let d0 = delay_response(peak[0], n, scenario.delta_f);
        let a0 = steering_ue([peak[1], peak[2]], scenario);
        let delay_amb: Vec<f64> = taus
            .iter()
            .map(|&t| inner(&delay_response(t, n, scenario.delta_f), &d0).norm() / n as f64)
            .collect();
        let n_u = scenario.n_ue() as f64;
        let mut angle_amb = vec![0.0; azs.len() * els.len()];
        for (i, &a) in azs.iter().enumerate() {
            for (j, &e) in els.iter().enumerate() {
                angle_amb[i * els.len() + j] = inner(&steering_ue([a, e], scenario), &a0).norm() / n_u;
            }
        }
        let peak_val = delay_amb.iter().cloned().fold(0.0, f64::max)
            * angle_amb.iter().cloned().fold(0.0, f64::max);
        let level = peak_val * 10f64.powf(-scenario.ref_th / 20.0);

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for (it, &t) in taus.iter().enumerate() {
            for (i, &a) in azs.iter().enumerate() {
                for (j, &e) in els.iter().enumerate() {
                    if delay_amb[it] * angle_amb[i * els.len() + j] >= level {
                        for (k, v) in [t, a, e].into_iter().enumerate() {
                            lo[k] = lo[k].min(v);
                            hi[k] = hi[k].max(v);
                        }
                    }
                }
            }
        }
        if !lo[0].is_finite() {
            return Err(Error::EmptyRegion);
        }
        let widen = |k: usize| [lo[k] - steps[k] / 2.0, hi[k] + steps[k] / 2.0];
        let mut el = widen(2);
        el[0] = el[0].max(1e-6);
        el[1] = el[1].min(std::f64::consts::PI - 1e-6);
        let mut delay = widen(0);
        delay[0] = delay[0].max(f64::EPSILON);
        Self::fixed(scenario, delay, widen(1), el)
    }

    pub fn contains_nonris(&self, eta: [f64; 3]) -> bool {
        let inside = |iv: &[f64; 2], v: f64| v >= iv[0] && v <= iv[1];
        inside(&self.delay_interval, eta[0])
            && inside(&self.az_interval, eta[1])
            && inside(&self.el_interval, eta[2])
    }

    pub fn center(&self) -> [f64; 3] {
        let m = |iv: &[f64; 2]| 0.5 * (iv[0] + iv[1]);
        [m(&self.delay_interval), m(&self.az_interval), m(&self.el_interval)]
    }

    pub fn center_position(&self, scenario: &Scenario) -> Result<Vector3<f64>> {
        invert_nonris(self.center(), scenario)
    }
}
