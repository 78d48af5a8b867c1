//! Scene of one sweep point: targets, channel, model and gain amplitudes.

use anyhow::Result;
use nalgebra::Vector3;
use ris_radar::config::ExperimentConfig;
use ris_radar::geometry::{channel_params, ChannelParams, PathGains, TargetSet};
use ris_radar::linalg::CVector;
use ris_radar::signal::{ResolutionRegion, SignalModel};

pub struct Scene {
    pub delta: f64,
    pub targets: TargetSet,
    pub params: ChannelParams,
    pub region: ResolutionRegion,
    pub model: SignalModel,
    /// Amplitudes only; trials draw their own gains from a copy.
    pub gains: PathGains,
}

impl Scene {
    pub fn new(cfg: &ExperimentConfig, delta: f64) -> Result<Self> {
        let targets = cfg.targets(delta)?;
        Self::with_targets(cfg, delta, targets)
    }

    pub fn with_targets(cfg: &ExperimentConfig, delta: f64, targets: TargetSet) -> Result<Self> {
        let params = channel_params(&cfg.scenario, &targets)?;
        let gains = PathGains::amplitudes(&cfg.scenario, &targets)?;
        let strongest = (0..targets.len())
            .max_by(|&a, &b| gains.rayleigh_scale_nonris[a].total_cmp(&gains.rayleigh_scale_nonris[b]))
            .unwrap_or(0);
        let region = cfg.resolution_region(params.targets[strongest].nonris())?;
        let model = cfg.model(&region)?;
        Ok(Self {
            delta,
            targets,
            params,
            region,
            model,
            gains,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.model.scenario.noise_var()
    }

    pub fn atoms_nonris(&self) -> Vec<CVector> {
        self.params.targets.iter().map(|p| self.model.atom_nonris(p.nonris())).collect()
    }

    pub fn atoms_ris(&self) -> Vec<CVector> {
        self.params.targets.iter().map(|p| self.model.atom_ris(p.ris())).collect()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.targets.positions
    }
}
