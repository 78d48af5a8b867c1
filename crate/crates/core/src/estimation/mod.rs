//! Grid-based detection by orthogonal matching pursuit, association of the
//! non-RIS and RIS detections, and weighted least-squares positioning.

mod assignment;
mod association;
mod dictionary;
mod omp;
mod positioning;

pub use assignment::assign;
pub use association::{angle_cost, associate, association_cost, Association};
pub use dictionary::{Dictionary, DictionaryConfig, DictionaryKind};
pub use omp::{omp, OmpResult, OmpStop};
pub use positioning::{
    localize, solve_position, Measurement, NlsConfig, NlsResult, PositionEstimate, WeightSource, Weighting,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Scenario;
use crate::signal::{SignalBlock, SignalModel};

/// Detected non-RIS path: `(tau, theta_az, theta_el)` and its gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonRisDetection {
    pub eta: [f64; 3],
    pub gain: Complex64,
}

/// Detected RIS path: `(theta_az, theta_el, tau_bar, phi_az, phi_el)` and its
/// gain. The UE angles are the dictionary's fixed direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RisDetection {
    pub eta: [f64; 5],
    pub gain: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub dictionary: DictionaryConfig,
    pub threshold_nonris: f64,
    pub threshold_ris: f64,
    /// OMP iteration cap per stream.
    pub max_targets: usize,
    pub weighting: Weighting,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            dictionary: DictionaryConfig::default(),
            threshold_nonris: 3e-5,
            threshold_ris: 3.5e-5,
            max_targets: 10,
            weighting: Weighting::Efim,
        }
    }
}

/// Everything estimated from one observation.
#[derive(Debug, Clone)]
pub struct EstimateSet {
    pub nonris: Vec<NonRisDetection>,
    pub ris: Vec<RisDetection>,
    pub associations: Vec<Association>,
    pub positions: Vec<PositionEstimate>,
    /// `max(L_n, L_r)`.
    pub l_hat: usize,
    pub residual_nonris: f64,
    pub residual_ris: f64,
}

/// Residual threshold that a noise-only stream exceeds with probability
/// about `1 - Phi(z)`: `sqrt(sigma^2 / 2 * (n + z sqrt(n)))` with
/// `n = N T~ N_u` complex samples. `||e||^2 / (sigma^2 / 2)` is Gamma(n, 1).
pub fn noise_threshold(scenario: &Scenario, z: f64) -> f64 {
    let n = (scenario.n_subcarriers * scenario.n_profiles() * scenario.n_ue()) as f64;
    (scenario.noise_var() / 2.0 * (n + z * n.sqrt())).sqrt()
}

/// Non-RIS detections of an OMP run truncated at `th`.
pub fn nonris_detections(run: &OmpResult, dict: &Dictionary, th: f64) -> Vec<NonRisDetection> {
    let (support, coef) = run.truncate(th);
    support
        .iter()
        .zip(coef)
        .map(|(&i, &gain)| NonRisDetection {
            eta: dict.grid_point(i),
            gain,
        })
        .collect()
}

/// RIS detections of an OMP run truncated at `th`.
pub fn ris_detections(run: &OmpResult, dict: &Dictionary, th: f64) -> Vec<RisDetection> {
    let (support, coef) = run.truncate(th);
    support
        .iter()
        .zip(coef)
        .map(|(&i, &gain)| {
            let p = dict.params(i);
            RisDetection {
                eta: [p[0], p[1], p[2], p[3], p[4]],
                gain,
            }
        })
        .collect()
}

/// Dictionaries and settings for repeated estimation with one model.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub config: EstimatorConfig,
    pub nonris: Dictionary,
    pub ris: Dictionary,
    pub nls: NlsConfig,
}

impl Estimator {
    pub fn new(model: &SignalModel, config: EstimatorConfig) -> Result<Self> {
        Ok(Self {
            nonris: Dictionary::for_region(model, DictionaryKind::NonRis, &config.dictionary)?,
            ris: Dictionary::for_region(model, DictionaryKind::Ris, &config.dictionary)?,
            config,
            nls: NlsConfig::default(),
        })
    }

    /// OMP on both streams with the configured thresholds.
    pub fn pursue(&self, block: &SignalBlock) -> Result<(OmpResult, OmpResult)> {
        self.pursue_with(block, self.config.threshold_nonris, self.config.threshold_ris)
    }

    /// OMP on both streams with explicit thresholds. A small threshold gives
    /// a run from which every larger threshold can be read off.
    pub fn pursue_with(&self, block: &SignalBlock, th_n: f64, th_r: f64) -> Result<(OmpResult, OmpResult)> {
        let n = omp(&block.y_nonris, &self.nonris, th_n, self.config.max_targets)?;
        let r = omp(&block.y_ris, &self.ris, th_r, self.config.max_targets)?;
        Ok((n, r))
    }

    /// Detections, association and positions from two OMP runs truncated at
    /// the given thresholds.
    pub fn finish(&self, model: &SignalModel, run_n: &OmpResult, run_r: &OmpResult, th_n: f64, th_r: f64) -> EstimateSet {
        let nonris = nonris_detections(run_n, &self.nonris, th_n);
        let ris = ris_detections(run_r, &self.ris, th_r);
        let associations = associate(&nonris, &ris, &model.scenario);
        let positions = localize(model, &nonris, &ris, &associations, self.config.weighting, &self.nls);
        EstimateSet {
            l_hat: nonris.len().max(ris.len()),
            residual_nonris: run_n.residual_norms[nonris.len()],
            residual_ris: run_r.residual_norms[ris.len()],
            nonris,
            ris,
            associations,
            positions,
        }
    }

    pub fn estimate(&self, model: &SignalModel, block: &SignalBlock) -> Result<EstimateSet> {
        let (n, r) = self.pursue(block)?;
        Ok(self.finish(model, &n, &r, self.config.threshold_nonris, self.config.threshold_ris))
    }
}
