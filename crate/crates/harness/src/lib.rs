//! Experiment driver: sweeps, Monte Carlo runs and their CSV artifacts.

pub mod bounds;
pub mod output;
pub mod scene;
pub mod seeds;
pub mod sense;

use std::path::{Path, PathBuf};

use anyhow::Result;
use ris_radar::config::ExperimentConfig;

pub use output::{Manifest, RunOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    CoherenceSweep,
    DetectionBound,
    FisherCdf,
    Sense,
    WorkingPrinciple,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CoherenceSweep => "coherence-sweep",
            Experiment::DetectionBound => "detection-bound",
            Experiment::FisherCdf => "fisher-cdf",
            Experiment::Sense => "sense",
            Experiment::WorkingPrinciple => "working-principle",
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub no_noise: bool,
}

pub fn resolve(o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if let Some(d) = &o.deltas {
        cfg.deltas = d.clone();
    }
    cfg.no_noise |= o.no_noise;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one experiment and writes its CSVs and `manifest.json` into `out`.
pub fn run(kind: Experiment, cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let mut o = RunOutput::create(out)?;
    match kind {
        Experiment::CoherenceSweep => bounds::coherence_sweep(cfg, &mut o)?,
        Experiment::DetectionBound => bounds::detection_bound(cfg, &mut o)?,
        Experiment::FisherCdf => bounds::fisher_cdf(cfg, &mut o)?,
        Experiment::Sense => {
            sense::sense(cfg, &mut o)?;
        }
        Experiment::WorkingPrinciple => sense::working_principle(cfg, &mut o)?,
    }
    o.finish(kind.name(), cfg.seed, cfg)
}
