//! Experiment configuration files.
//!
//! A TOML file with optional sections; anything left out takes the
//! reference value. Angles are in radians, delays in nanoseconds.
//!
//! ```toml
//! seed = 7
//! trials = 200
//! deltas = [0.02, 0.06, 0.1]
//!
//! [scenario]
//! n_subcarriers = 75
//!
//! [region]
//! delay_ns = [112.0, 128.0]
//! az = [0.55, 0.85]
//! el = [0.65, 0.95]
//!
//! [targets]
//! kind = "explicit"
//! points = [{ eta = [120.0, 0.7, 0.8], rcs = 50.0 }]
//! ```

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::EstimatorConfig;
use crate::geometry::{invert_nonris, Scenario, TargetSet};
use crate::signal::{AmbiguityGrid, ResolutionRegion, ScheduleMode, SignalModel};

const NS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionConfig {
    /// Fixed box, or the ambiguity box around the strongest target.
    pub from_ambiguity: bool,
    pub delay_ns: [f64; 2],
    pub az: [f64; 2],
    pub el: [f64; 2],
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            from_ambiguity: false,
            delay_ns: [112.0, 128.0],
            az: [0.55, 0.85],
            el: [0.65, 0.95],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub d_az: usize,
    pub d_el: usize,
    pub mode: ScheduleMode,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            d_az: 5,
            d_el: 5,
            mode: ScheduleMode::Focused,
        }
    }
}

/// One scatter point, given by its non-RIS parameters or its position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    /// `(delay in ns, azimuth, elevation)` seen from the UE.
    pub eta: Option<[f64; 3]>,
    pub position: Option<[f64; 3]>,
    /// Expected RCS (m^2).
    pub rcs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetConfig {
    /// The three-point cluster at spacing `delta`, `count` leading points.
    Cluster { count: usize },
    Explicit { points: Vec<PointConfig> },
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig::Cluster { count: 3 }
    }
}

/// Grids of the bound and coherence sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// False-alarm probabilities of the detection bound curves.
    pub p_fa: Vec<f64>,
    /// RIS side lengths (elements per axis) of the coherence sweep.
    pub ris_sides: Vec<usize>,
    /// `(d_az, d_el)` profile grids of the coherence sweep; `T~ = d_az d_el`.
    pub profile_grids: Vec<[usize; 2]>,
    /// UE side lengths of the coherence sweep.
    pub ue_sides: Vec<usize>,
    /// Points per angle axis of the objective surfaces.
    pub surface_points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            p_fa: log_thresholds(1e-6, 1.0, 31),
            ris_sides: vec![15, 25, 35],
            profile_grids: vec![[3, 3], [5, 5]],
            ue_sides: vec![2, 4],
            surface_points: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    /// Angular spacings (rad) for cluster sweeps.
    pub deltas: Vec<f64>,
    pub no_noise: bool,
    /// Move the nearest dictionary grid lines onto the true parameters of
    /// every target (sanity runs with known on-grid truth).
    pub oracle_grid: bool,
    /// Residual thresholds swept for ROC curves.
    pub thresholds_nonris: Vec<f64>,
    pub thresholds_ris: Vec<f64>,
    pub scenario: Scenario,
    pub region: RegionConfig,
    pub schedule: ScheduleConfig,
    pub estimator: EstimatorConfig,
    pub targets: TargetConfig,
    pub sweep: SweepConfig,
}

/// Log-spaced thresholds `lo * (hi / lo)^(k / (n - 1))`.
pub fn log_thresholds(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n.max(2) - 1) as f64))
        .collect()
}

/// Default ROC sweep: steps of 2e-8 across the per-stream noise floor of
/// the reference setting (about 2.91e-5), then a log tail up to 2e-4.
pub fn roc_thresholds() -> Vec<f64> {
    let mut v: Vec<f64> = (0..250).map(|k| 2.8e-5 + 2e-8 * k as f64).collect();
    v.extend(log_thresholds(3.3e-5, 2e-4, 41));
    v
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 200,
            deltas: vec![0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14],
            no_noise: false,
            oracle_grid: false,
            thresholds_nonris: roc_thresholds(),
            thresholds_ris: roc_thresholds(),
            scenario: Scenario::table_one(),
            region: RegionConfig::default(),
            schedule: ScheduleConfig::default(),
            estimator: EstimatorConfig::default(),
            targets: TargetConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::Config(format!("field `{name}`: {msg}")));
        if self.trials == 0 {
            return field("trials", "must be at least 1");
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0)) {
            return field("deltas", &format!("spacing {d} must be positive"));
        }
        for (name, th) in [("thresholds_nonris", &self.thresholds_nonris), ("thresholds_ris", &self.thresholds_ris)] {
            if th.iter().any(|t| !(*t > 0.0)) {
                return field(name, "thresholds must be positive");
            }
        }
        if self.thresholds_nonris.len() != self.thresholds_ris.len() {
            return field("thresholds_ris", "must pair up with thresholds_nonris (equal lengths)");
        }
        if !(self.estimator.threshold_nonris > 0.0 && self.estimator.threshold_ris > 0.0) {
            return field("estimator", "thresholds must be positive");
        }
        if self.schedule.d_az * self.schedule.d_el != self.scenario.n_profiles() {
            return field(
                "schedule",
                &format!(
                    "d_az * d_el = {} must equal n_symbols / 2 = {}",
                    self.schedule.d_az * self.schedule.d_el,
                    self.scenario.n_profiles()
                ),
            );
        }
        let sw = &self.sweep;
        if sw.p_fa.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return field("sweep.p_fa", "probabilities must lie in (0, 1]");
        }
        if sw.ris_sides.contains(&0) || sw.ue_sides.contains(&0) || sw.profile_grids.iter().any(|g| g[0] * g[1] == 0) {
            return field("sweep", "array sides and profile grids must be positive");
        }
        if sw.surface_points < 2 {
            return field("sweep.surface_points", "must be at least 2");
        }
        match &self.targets {
            TargetConfig::Cluster { count } if !(1..=3).contains(count) => {
                return field("targets.count", "must be 1, 2 or 3");
            }
            TargetConfig::Explicit { points } => {
                for (i, p) in points.iter().enumerate() {
                    if p.eta.is_some() == p.position.is_some() {
                        return field(&format!("targets.points[{i}]"), "give exactly one of `eta` and `position`");
                    }
                    if !(p.rcs > 0.0) {
                        return field(&format!("targets.points[{i}].rcs"), "must be positive");
                    }
                }
            }
            _ => {}
        }
        self.scenario
            .validate()
            .map_err(|e| Error::Config(format!("section `scenario`: {e}")))
    }

    /// Targets of the configuration at cluster spacing `delta`.
    pub fn targets(&self, delta: f64) -> Result<TargetSet> {
        match &self.targets {
            TargetConfig::Cluster { count } => TargetSet::cluster_of(&self.scenario, delta, *count),
            TargetConfig::Explicit { points } => {
                let positions = points
                    .iter()
                    .map(|p| match (p.eta, p.position) {
                        (Some(e), _) => invert_nonris([e[0] * NS, e[1], e[2]], &self.scenario),
                        (None, Some(c)) => Ok(Vector3::from(c)),
                        (None, None) => Err(Error::Config("target without eta or position".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                TargetSet::new(positions, points.iter().map(|p| p.rcs).collect())
            }
        }
    }

    /// Resolution region; `peak` is the strongest target's non-RIS triple
    /// (seconds) used by the ambiguity variant.
    pub fn resolution_region(&self, peak: [f64; 3]) -> Result<ResolutionRegion> {
        if self.region.from_ambiguity {
            ResolutionRegion::from_ambiguity(&self.scenario, peak, AmbiguityGrid::default())
        } else {
            let d = self.region.delay_ns;
            ResolutionRegion::fixed(&self.scenario, [d[0] * NS, d[1] * NS], self.region.az, self.region.el)
        }
    }

    pub fn model(&self, region: &ResolutionRegion) -> Result<SignalModel> {
        SignalModel::new(&self.scenario, region, self.schedule.d_az, self.schedule.d_el, self.schedule.mode)
    }
}
