//! Closed-form sweeps: detection bounds, coherences and Fisher bounds.

use anyhow::Result;
use rayon::prelude::*;
use ris_radar::config::ExperimentConfig;
use ris_radar::detection::{self, coherence_report, expected_pd_from, joint_pd, CoherenceReport};
use ris_radar::fisher::FisherGeometry;
use ris_radar::linalg::CVector;
use serde::Serialize;

use crate::output::{delta_tag, RunOutput};
use crate::scene::Scene;
use crate::seeds::trial_rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub delta: f64,
    /// 1-based target index in configuration order.
    pub target: usize,
    pub signal: &'static str,
    pub p_fa: f64,
    pub pd: f64,
    pub auc: f64,
    #[serde(rename = "C12")]
    pub c12: Option<f64>,
    #[serde(rename = "C13")]
    pub c13: Option<f64>,
    #[serde(rename = "C23")]
    pub c23: Option<f64>,
    #[serde(rename = "Ctilde")]
    pub ctilde: Option<f64>,
}

/// Area under `(2p - p^2, pd_n(p) + pd_r(p) - pd_n(p) pd_r(p))` for `p` in
/// `[0, 1]`, with `pd(p) = p^(1 / (1 + A zeta))` per stream.
///
/// Integrated over `s = ln p` with composite Simpson; the part below
/// `p = e^-60` is dropped.
pub fn joint_auc(a_zeta_n: f64, a_zeta_r: f64) -> f64 {
    let (lo, n) = (-60.0_f64, 6000);
    let h = -lo / n as f64;
    let f = |s: f64| {
        let p = s.exp();
        let (pd, _) = joint_pd(expected_pd_from(a_zeta_n, p), expected_pd_from(a_zeta_r, p), p);
        pd * (2.0 - 2.0 * p) * p
    };
    let mut sum = f(lo) + f(0.0);
    for k in 1..n {
        sum += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn pair(r: &CoherenceReport, i: usize, k: usize) -> Option<f64> {
    r.pairwise.get(i).and_then(|row| row.get(k)).copied()
}

/// Expected detection curves of every target on both streams and their
/// union at one spacing.
pub fn detection_bound_rows(cfg: &ExperimentConfig, scene: &Scene) -> Result<Vec<BoundRow>> {
    let sigma2 = scene.sigma2();
    let (atoms_n, atoms_r) = (scene.atoms_nonris(), scene.atoms_ris());
    let bn = detection::detection_bound(&atoms_n, &scene.gains.rayleigh_scale_nonris, sigma2)?;
    let br = detection::detection_bound(&atoms_r, &scene.gains.rayleigh_scale_ris, sigma2)?;
    let cn = coherence_report(&atoms_n)?;
    let cr = coherence_report(&atoms_r)?;
    let step = |order: &[usize], l: usize| order.iter().position(|&i| i == l).expect("target in order");
    let mut rows = Vec::new();
    for l in 0..atoms_n.len() {
        let (sn, sr) = (step(&bn.order, l), step(&br.order, l));
        let (azn, azr) = (bn.a_zeta(sn), br.a_zeta(sr));
        let auc_joint = joint_auc(azn, azr);
        let row = |signal, p_fa, pd, auc, c: Option<&CoherenceReport>| BoundRow {
            delta: scene.delta,
            target: l + 1,
            signal,
            p_fa,
            pd,
            auc,
            c12: c.and_then(|c| pair(c, 0, 1)),
            c13: c.and_then(|c| pair(c, 0, 2)),
            c23: c.and_then(|c| pair(c, 1, 2)),
            ctilde: c.and_then(|c| c.generalized),
        };
        for &p in &cfg.sweep.p_fa {
            let (pd_n, pd_r) = (bn.pd(sn, p), br.pd(sr, p));
            let (pd_j, pfa_j) = joint_pd(pd_n, pd_r, p);
            rows.push(row("nonris", p, pd_n, bn.auc[sn], Some(&cn)));
            rows.push(row("ris", p, pd_r, br.auc[sr], Some(&cr)));
            rows.push(row("joint", pfa_j, pd_j, auc_joint, None));
        }
    }
    Ok(rows)
}

pub fn detection_bound(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let mut rows = Vec::new();
    for &delta in &cfg.deltas {
        rows.extend(detection_bound_rows(cfg, &Scene::new(cfg, delta)?)?);
    }
    out.write_csv("detection_bound.csv", &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceRow {
    pub delta: f64,
    pub signal: &'static str,
    pub n_ris: usize,
    pub t_tilde: usize,
    pub n_ue: usize,
    pub metric: &'static str,
    pub value: f64,
}

fn coherence_metrics(atoms: &[CVector]) -> Result<Vec<(&'static str, f64)>> {
    let r = coherence_report(atoms)?;
    let mut m = Vec::new();
    for (name, i, k) in [("c12", 0, 1), ("c13", 0, 2), ("c23", 1, 2)] {
        if let Some(v) = pair(&r, i, k) {
            m.push((name, v));
        }
    }
    if let (Some(g), Some(b)) = (r.generalized, r.breve) {
        m.push(("ctilde", g));
        m.push(("cbreve", b));
    }
    Ok(m)
}

/// Coherences of the cluster against the spacing for each UE size (non-RIS
/// stream) and each RIS size and profile count (RIS stream).
pub fn coherence_sweep(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let mut rows = Vec::new();
    for &delta in &cfg.deltas {
        for &u in &cfg.sweep.ue_sides {
            let mut c = cfg.clone();
            c.scenario.ue_array = (u, u);
            let scene = Scene::new(&c, delta)?;
            for (metric, value) in coherence_metrics(&scene.atoms_nonris())? {
                rows.push(CoherenceRow {
                    delta,
                    signal: "nonris",
                    n_ris: c.scenario.n_ris(),
                    t_tilde: c.scenario.n_profiles(),
                    n_ue: u * u,
                    metric,
                    value,
                });
            }
        }
        for &side in &cfg.sweep.ris_sides {
            for &[d_az, d_el] in &cfg.sweep.profile_grids {
                let mut c = cfg.clone();
                c.scenario.ris_array = (side, side);
                c.scenario.n_symbols = 2 * d_az * d_el;
                c.schedule.d_az = d_az;
                c.schedule.d_el = d_el;
                let scene = Scene::new(&c, delta)?;
                for (metric, value) in coherence_metrics(&scene.atoms_ris())? {
                    rows.push(CoherenceRow {
                        delta,
                        signal: "ris",
                        n_ris: side * side,
                        t_tilde: d_az * d_el,
                        n_ue: c.scenario.n_ue(),
                        metric,
                        value,
                    });
                }
            }
        }
    }
    out.write_csv("coherence_sweep.csv", &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherRow {
    pub draw: usize,
    pub target: usize,
    pub metric: &'static str,
    pub signal: &'static str,
    pub value: f64,
}

/// Bounds for `trials` gain draws of one scene. Draw `k` uses stream
/// `(point, k)`.
pub fn fisher_rows(cfg: &ExperimentConfig, scene: &Scene, point: usize) -> Result<Vec<FisherRow>> {
    let geo = FisherGeometry::new(&scene.model, &scene.params, scene.positions())?;
    let sigma2 = scene.sigma2();
    let per_draw: Vec<Result<Vec<FisherRow>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|draw| {
            let mut rng = trial_rng(cfg.seed, point, draw);
            let mut g = scene.gains.clone();
            g.draw(&scene.targets.rcs, &mut rng);
            let r = geo.report(&g.alpha, &g.alpha_bar, sigma2)?;
            let mut rows = Vec::new();
            for l in 0..geo.n_targets() {
                let mut push = |metric, signal, value| {
                    rows.push(FisherRow {
                        draw,
                        target: l + 1,
                        metric,
                        signal,
                        value,
                    })
                };
                push("peb", "nonris", r.peb_n[l]);
                push("peb", "ris", r.peb_r[l]);
                push("peb", "joint", r.peb_joint[l]);
                push("deb", "nonris", r.deb_n[l]);
                push("deb", "ris", r.deb_r[l]);
                push("aeb", "nonris", r.aeb_n[l]);
                push("aeb", "ris", r.aeb_r[l]);
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_draw {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn fisher_cdf(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    for (point, &delta) in cfg.deltas.iter().enumerate() {
        let rows = fisher_rows(cfg, &Scene::new(cfg, delta)?, point)?;
        out.write_csv(&format!("fisher_cdf_delta_{}.csv", delta_tag(delta)), &rows)?;
    }
    Ok(())
}
