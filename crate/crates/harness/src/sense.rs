//! Full sensing pipeline: synthesis, OMP on both streams, association and
//! positioning, scored by empirical detection rates and GOSPA.

use anyhow::{bail, Result};
use rayon::prelude::*;
use ris_radar::config::ExperimentConfig;
use ris_radar::estimation::{omp, Dictionary, DictionaryKind, EstimateSet, Estimator};
use ris_radar::linalg::CVector;
use ris_radar::metrics::{empirical_auc, empirical_rates, gospa, mean_ci95, GospaParams, TrialRecord};
use ris_radar::signal::SignalBlock;
use serde::Serialize;

use crate::output::{delta_tag, RunOutput};
use crate::scene::Scene;
use crate::seeds::trial_rng;

pub const SIGNALS: [&str; 3] = ["nonris", "ris", "joint"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRow {
    pub trial: usize,
    pub stream: &'static str,
    pub idx: usize,
    pub tau: Option<f64>,
    pub theta_az: f64,
    pub theta_el: f64,
    pub tau_bar: Option<f64>,
    pub phi_az: Option<f64>,
    pub phi_el: Option<f64>,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
    pub assoc_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub delta: f64,
    pub trial: usize,
    pub signal: &'static str,
    pub l_hat: usize,
    pub gospa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub experiment: &'static str,
    pub delta: f64,
    pub signal: &'static str,
    pub target: usize,
    pub p_fa: f64,
    pub p_d: f64,
    pub auc: f64,
    pub gospa_mean: f64,
    pub gospa_ci95: f64,
}

/// Outcome of one trial.
#[derive(Debug, Clone)]
pub struct SenseTrial {
    /// `[nonris, ris, joint]` detected counts per threshold pair.
    pub l_hat: Vec<[usize; 3]>,
    /// `[nonris, ris, joint]` GOSPA at the estimator's thresholds.
    pub gospa: [f64; 3],
    /// Full pipeline at the estimator's thresholds.
    pub estimate: EstimateSet,
}

/// Trials of one spacing.
#[derive(Debug, Clone)]
pub struct SensePoint {
    pub delta: f64,
    pub true_count: usize,
    pub trials: Vec<SenseTrial>,
}

/// Observation of trial `trial` at sweep point `point`: gains first, then
/// noise, from the trial's own stream.
pub fn observe(cfg: &ExperimentConfig, scene: &Scene, point: usize, trial: usize) -> Result<SignalBlock> {
    let mut rng = trial_rng(cfg.seed, point, trial);
    let mut g = scene.gains.clone();
    g.draw(&scene.targets.rcs, &mut rng);
    let block = if cfg.no_noise {
        scene.model.synthesize_with::<rand_chacha::ChaCha8Rng>(&scene.params, &g, None)?
    } else {
        scene.model.synthesize_with(&scene.params, &g, Some(&mut rng))?
    };
    Ok(block)
}

fn min_of(v: &[f64], extra: f64) -> f64 {
    v.iter().copied().fold(extra, f64::min)
}

pub fn run_trial(cfg: &ExperimentConfig, scene: &Scene, est: &Estimator, point: usize, trial: usize) -> Result<SenseTrial> {
    let block = observe(cfg, scene, point, trial)?;
    let (def_n, def_r) = (cfg.estimator.threshold_nonris, cfg.estimator.threshold_ris);
    // One run at the smallest threshold holds every larger one as a prefix.
    let (run_n, run_r) = est.pursue_with(
        &block,
        min_of(&cfg.thresholds_nonris, def_n),
        min_of(&cfg.thresholds_ris, def_r),
    )?;
    let l_hat = cfg
        .thresholds_nonris
        .iter()
        .zip(&cfg.thresholds_ris)
        .map(|(&tn, &tr)| {
            let (n, r) = (run_n.support_size_at(tn), run_r.support_size_at(tr));
            [n, r, n.max(r)]
        })
        .collect();
    let truth = scene.positions();
    let g = GospaParams::default();
    let score = |e: &EstimateSet| -> Result<f64> {
        let pos: Vec<_> = e.positions.iter().map(|p| p.position).collect();
        Ok(gospa(truth, &pos, &g)?)
    };
    let only_n = est.finish(&scene.model, &run_n, &run_r, def_n, f64::INFINITY);
    let only_r = est.finish(&scene.model, &run_n, &run_r, f64::INFINITY, def_r);
    let joint = est.finish(&scene.model, &run_n, &run_r, def_n, def_r);
    Ok(SenseTrial {
        l_hat,
        gospa: [score(&only_n)?, score(&only_r)?, score(&joint)?],
        estimate: joint,
    })
}

/// Estimator of a scene; with `oracle_grid` both dictionaries pass through
/// the true parameters.
pub fn estimator(cfg: &ExperimentConfig, scene: &Scene) -> Result<Estimator> {
    let mut est = Estimator::new(&scene.model, cfg.estimator)?;
    if cfg.oracle_grid {
        let d = &cfg.estimator.dictionary;
        let t = &scene.params.targets;
        let n: Vec<[f64; 3]> = t.iter().map(|p| p.nonris()).collect();
        let r: Vec<[f64; 3]> = t.iter().map(|p| [p.tau_bar, p.phi[0], p.phi[1]]).collect();
        est.nonris = Dictionary::for_region_through(&scene.model, DictionaryKind::NonRis, d, &n)?;
        est.ris = Dictionary::for_region_through(&scene.model, DictionaryKind::Ris, d, &r)?;
    }
    Ok(est)
}

pub fn run_point(cfg: &ExperimentConfig, point: usize, delta: f64) -> Result<SensePoint> {
    let scene = Scene::new(cfg, delta)?;
    let est = estimator(cfg, &scene)?;
    let trials: Vec<Result<SenseTrial>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &scene, &est, point, t))
        .collect();
    Ok(SensePoint {
        delta,
        true_count: scene.targets.len(),
        trials: trials.into_iter().collect::<Result<_>>()?,
    })
}

/// ROC points `(p_fa, p_d)` of target `l` (0-based) for one signal over the
/// threshold sweep.
pub fn roc(point: &SensePoint, signal: usize, l: usize) -> Result<Vec<(f64, f64)>> {
    let n_th = point.trials.first().map_or(0, |t| t.l_hat.len());
    (0..n_th)
        .map(|k| {
            let recs: Vec<TrialRecord> = point
                .trials
                .iter()
                .map(|t| TrialRecord {
                    true_count: point.true_count,
                    estimated_count: t.l_hat[k][signal],
                    true_positions: Vec::new(),
                    estimated_positions: Vec::new(),
                    threshold: k as f64,
                })
                .collect();
            let r = empirical_rates(&recs)?;
            Ok((r.p_fa, r.p_d[l]))
        })
        .collect()
}

pub fn auc(point: &SensePoint, signal: usize, l: usize) -> Result<f64> {
    Ok(empirical_auc(&roc(point, signal, l)?))
}

pub fn gospa_summary(point: &SensePoint, signal: usize) -> (f64, f64) {
    let v: Vec<f64> = point.trials.iter().map(|t| t.gospa[signal]).collect();
    mean_ci95(&v)
}

pub fn metric_rows(point: &SensePoint) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for (s, &signal) in SIGNALS.iter().enumerate() {
        let (gm, gc) = gospa_summary(point, s);
        for l in 0..point.true_count {
            let pts = roc(point, s, l)?;
            let a = empirical_auc(&pts);
            for (p_fa, p_d) in pts {
                rows.push(MetricRow {
                    experiment: "sense",
                    delta: point.delta,
                    signal,
                    target: l + 1,
                    p_fa,
                    p_d,
                    auc: a,
                    gospa_mean: gm,
                    gospa_ci95: gc,
                });
            }
        }
    }
    Ok(rows)
}

pub fn detection_rows(trial: usize, e: &EstimateSet) -> Vec<DetectionRow> {
    use ris_radar::estimation::Association;
    let assoc_n = |i: usize| {
        e.associations.iter().position(|a| match *a {
            Association::Pair { nonris, .. } => nonris == i,
            Association::NonRisOnly(k) => k == i,
            Association::RisOnly(_) => false,
        })
    };
    let assoc_r = |i: usize| {
        e.associations.iter().position(|a| match *a {
            Association::Pair { ris, .. } => ris == i,
            Association::RisOnly(k) => k == i,
            Association::NonRisOnly(_) => false,
        })
    };
    let pos = |a: Option<usize>| a.and_then(|a| e.positions.get(a)).map(|p| p.position);
    let mut rows = Vec::new();
    for (idx, d) in e.nonris.iter().enumerate() {
        let a = assoc_n(idx);
        let p = pos(a);
        rows.push(DetectionRow {
            trial,
            stream: "nonris",
            idx,
            tau: Some(d.eta[0]),
            theta_az: d.eta[1],
            theta_el: d.eta[2],
            tau_bar: None,
            phi_az: None,
            phi_el: None,
            alpha_re: d.gain.re,
            alpha_im: d.gain.im,
            x: p.map(|p| p.x),
            y: p.map(|p| p.y),
            z: p.map(|p| p.z),
            assoc_id: a,
        });
    }
    for (idx, d) in e.ris.iter().enumerate() {
        let a = assoc_r(idx);
        let p = pos(a);
        rows.push(DetectionRow {
            trial,
            stream: "ris",
            idx,
            tau: None,
            theta_az: d.eta[0],
            theta_el: d.eta[1],
            tau_bar: Some(d.eta[2]),
            phi_az: Some(d.eta[3]),
            phi_el: Some(d.eta[4]),
            alpha_re: d.gain.re,
            alpha_im: d.gain.im,
            x: p.map(|p| p.x),
            y: p.map(|p| p.y),
            z: p.map(|p| p.z),
            assoc_id: a,
        });
    }
    rows
}

pub fn trial_rows(point: &SensePoint) -> Vec<TrialRow> {
    let mut rows = Vec::new();
    for (trial, t) in point.trials.iter().enumerate() {
        let counts = [t.estimate.nonris.len(), t.estimate.ris.len(), t.estimate.l_hat];
        for (s, &signal) in SIGNALS.iter().enumerate() {
            rows.push(TrialRow {
                delta: point.delta,
                trial,
                signal,
                l_hat: counts[s],
                gospa: t.gospa[s],
            });
        }
    }
    rows
}

pub fn sense(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<Vec<SensePoint>> {
    if cfg.thresholds_nonris.len() != cfg.thresholds_ris.len() {
        bail!("threshold lists are paired by index and must have equal lengths");
    }
    let mut metrics = Vec::new();
    let mut trials = Vec::new();
    let mut points = Vec::new();
    for (point, &delta) in cfg.deltas.iter().enumerate() {
        let p = run_point(cfg, point, delta)?;
        metrics.extend(metric_rows(&p)?);
        trials.extend(trial_rows(&p));
        let det: Vec<DetectionRow> = p
            .trials
            .iter()
            .enumerate()
            .flat_map(|(t, tr)| detection_rows(t, &tr.estimate))
            .collect();
        out.write_csv(&format!("sense_detections_delta_{}.csv", delta_tag(delta)), &det)?;
        points.push(p);
    }
    out.write_csv("sense_metrics.csv", &metrics)?;
    out.write_csv("sense_trials.csv", &trials)?;
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub stream: &'static str,
    pub iteration: usize,
    pub az: f64,
    pub el: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub target: usize,
    pub tau: f64,
    pub theta_az: f64,
    pub theta_el: f64,
    pub tau_bar: f64,
    pub phi_az: f64,
    pub phi_el: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// OMP objective over a dense angle grid at the first target's delay, on the
/// observation and on the residual after the first OMP iteration.
fn surfaces(
    scene: &Scene,
    stream: &'static str,
    y: &CVector,
    search: &Dictionary,
    delay: f64,
    points: usize,
) -> Result<Vec<SurfaceRow>> {
    let az = linspace(search.az[0], search.az[search.az.len() - 1], points);
    let el = linspace(search.el[0], search.el[search.el.len() - 1], points);
    let surface = Dictionary::with_grid(&scene.model, search.kind, vec![delay], az.clone(), el.clone(), search.normalized)?;
    let first = omp(y, search, f64::MIN_POSITIVE, 1)?;
    let mut r = y.clone();
    if let (Some(&i), Some(&c)) = (first.support.first(), first.coefficients.first()) {
        r -= search.atom(i) * c;
    }
    let mut rows = Vec::new();
    for (iteration, v) in [(1, y), (2, &r)] {
        let obj = surface.objective(v)?;
        for (ia, &a) in az.iter().enumerate() {
            for (ie, &e) in el.iter().enumerate() {
                rows.push(SurfaceRow {
                    stream,
                    iteration,
                    az: a,
                    el: e,
                    value: obj[ia * el.len() + ie],
                });
            }
        }
    }
    Ok(rows)
}

/// Objective surfaces of the first two OMP iterations for trial 0 at the
/// first spacing of the configuration.
pub fn working_principle(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let Some(&delta) = cfg.deltas.first() else {
        bail!("no spacing given");
    };
    let scene = Scene::new(cfg, delta)?;
    let est = estimator(cfg, &scene)?;
    let block = observe(cfg, &scene, 0, 0)?;
    let t0 = scene.params.targets[0];
    let n = cfg.sweep.surface_points;
    let mut rows = surfaces(&scene, "nonris", &block.y_nonris, &est.nonris, t0.tau, n)?;
    rows.extend(surfaces(&scene, "ris", &block.y_ris, &est.ris, t0.tau_bar, n)?);
    out.write_csv("working_principle.csv", &rows)?;
    let truth: Vec<TruthRow> = scene
        .params
        .targets
        .iter()
        .enumerate()
        .zip(scene.positions())
        .map(|((i, p), c)| TruthRow {
            target: i + 1,
            tau: p.tau,
            theta_az: p.theta[0],
            theta_el: p.theta[1],
            tau_bar: p.tau_bar,
            phi_az: p.phi[0],
            phi_el: p.phi[1],
            x: c.x,
            y: c.y,
            z: c.z,
        })
        .collect();
    out.write_csv("working_principle_truth.csv", &truth)
}
