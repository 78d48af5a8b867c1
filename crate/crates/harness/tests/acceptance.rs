//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ris_radar::config::ExperimentConfig;
use ris_radar::detection::{
    coherence, detection_order, expected_pd, noncentrality, nonris_coherence_factors, pd_from_noncentrality,
    ris_coherence_factors, three, threshold,
};
use ris_radar::estimation::{noise_threshold, Dictionary, DictionaryKind, Estimator, EstimatorConfig};
use ris_radar::fisher::{
    atom_derivatives_nonris, atom_derivatives_ris, equivalent_fim_case_study, equivalent_fim_schur, CaseStudyParam,
};
use ris_radar::geometry::{channel_params, invert_nonris, path_gains, target_params, TargetSet};
use ris_radar::linalg::{inner, orthonormal_basis, project_out, CVector};
use ris_radar::signal::{ResolutionRegion, ScheduleMode, SignalModel};
use ris_radar_harness::bounds::{detection_bound_rows, fisher_rows};
use ris_radar_harness::scene::Scene;
use ris_radar_harness::sense::{self, SensePoint};
use ris_radar_harness::{run, Experiment};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sd, im * sd)
}

fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> CVector {
    CVector::from_iterator(n, (0..n).map(|_| cn(rng, var)))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn rel_vec(a: &CVector, b: &CVector) -> f64 {
    (a - b).norm() / b.norm()
}

fn default_model() -> SignalModel {
    let cfg = ExperimentConfig::default();
    let region = ResolutionRegion::reference(&cfg.scenario).unwrap();
    SignalModel::new(&cfg.scenario, &region, 5, 5, ScheduleMode::Focused).unwrap()
}

fn random_eta<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    [
        rng.random_range(112e-9..128e-9),
        rng.random_range(0.55..0.85),
        rng.random_range(0.65..0.95),
    ]
}

fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for draw in 0..200 {
        let n = 6 + draw % 5;
        let g: Vec<CVector> = (0..3).map(|_| cn_vector(&mut rng, n, 1.0)).collect();
        let alpha = [cn(&mut rng, 1.0), cn(&mut rng, 1.0), cn(&mut rng, 1.0)];
        let scales = [rng.random_range(0.2..2.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)];
        let sigma2 = rng.random_range(0.1..2.0);
        let p_fa = 10f64.powf(-rng.random_range(1.0..4.0));
        let mu = three::noncentralities([&g[0], &g[1], &g[2]], alpha, sigma2).unwrap();
        let pd = three::expected_pds([&g[0], &g[1], &g[2]], scales, sigma2, p_fa).unwrap();
        for l in 0..3 {
            worst = worst.max(rel(mu[l], noncentrality(&g, &alpha, sigma2, l).unwrap().mu));
            worst = worst.max(rel(pd[l], expected_pd(&g, &scales, sigma2, l, p_fa).unwrap()));
        }
    }
    outcome(worst < 1e-8, format!("200 draws, worst relative error {worst:.2e} (< 1e-8)"))
}

fn coherence_factorization(m: &SignalModel) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (el, ek) = (random_eta(&mut rng), random_eta(&mut rng));
        let (a, d) = nonris_coherence_factors(m, el, ek);
        worst = worst.max(rel(a * d, coherence(&m.atom_nonris(el), &m.atom_nonris(ek)).unwrap()));
        let ris = |e: [f64; 3]| target_params(&m.scenario, &invert_nonris(e, &m.scenario).unwrap()).unwrap().ris();
        let (rl, rk) = (ris(el), ris(ek));
        let (v, d) = ris_coherence_factors(m, rl, rk);
        worst = worst.max(rel(v * d, coherence(&m.atom_ris(rl), &m.atom_ris(rk)).unwrap()));
    }
    outcome(worst < 1e-10, format!("100 pairs per stream, worst relative error {worst:.2e} (< 1e-10)"))
}

fn central_difference(f: impl Fn(f64) -> CVector, x: f64, h: f64) -> CVector {
    (f(x + h) - f(x - h)) / Complex64::new(2.0 * h, 0.0)
}

fn derivatives_and_equivalent_fim(m: &SignalModel) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let h_tau = 1e-7 / m.scenario.bandwidth();
    let h = 1e-7;
    let mut worst_fd: f64 = 0.0;
    for _ in 0..100 {
        let eta = random_eta(&mut rng);
        let d = atom_derivatives_nonris(m, eta);
        worst_fd = worst_fd
            .max(rel_vec(&central_difference(|t| m.atom_nonris([t, eta[1], eta[2]]), eta[0], h_tau), &d.d_tau))
            .max(rel_vec(&central_difference(|a| m.atom_nonris([eta[0], a, eta[2]]), eta[1], h), &d.d_az))
            .max(rel_vec(&central_difference(|e| m.atom_nonris([eta[0], eta[1], e]), eta[2], h), &d.d_el));
        let c = invert_nonris(eta, &m.scenario).unwrap();
        let er = target_params(&m.scenario, &c).unwrap().ris();
        let d = atom_derivatives_ris(m, er);
        let analytic = [&d.d_theta[0], &d.d_theta[1], &d.d_tau, &d.d_phi[0], &d.d_phi[1]];
        for (k, a) in analytic.iter().enumerate() {
            let fd = central_difference(
                |x| {
                    let mut e = er;
                    e[k] = x;
                    m.atom_ris(e)
                },
                er[k],
                if k == 2 { h_tau } else { h },
            );
            worst_fd = worst_fd.max(rel_vec(&fd, a));
        }
    }
    let mut worst_schur: f64 = 0.0;
    for _ in 0..50 {
        let t: Vec<_> = (0..2)
            .map(|_| {
                let c = invert_nonris(random_eta(&mut rng), &m.scenario).unwrap();
                target_params(&m.scenario, &c).unwrap()
            })
            .collect();
        let alpha = [cn(&mut rng, 1.0), cn(&mut rng, 1.0)];
        let sigma2 = 1e-3;
        for which in [CaseStudyParam::NonRisAzimuth, CaseStudyParam::RisAzimuth] {
            let closed = equivalent_fim_case_study(m, which, [&t[0], &t[1]], alpha, sigma2).unwrap();
            let (g, gd) = match which {
                CaseStudyParam::NonRisAzimuth => {
                    let a = atom_derivatives_nonris(m, t[0].nonris());
                    let b = atom_derivatives_nonris(m, t[1].nonris());
                    ([a.g, b.g], [a.d_az, b.d_az])
                }
                CaseStudyParam::RisAzimuth => {
                    let a = atom_derivatives_ris(m, t[0].ris());
                    let b = atom_derivatives_ris(m, t[1].ris());
                    let [pa, _] = a.d_phi;
                    let [pb, _] = b.d_phi;
                    ([a.g, b.g], [pa, pb])
                }
            };
            let schur = equivalent_fim_schur([&g[0], &g[1]], [&gd[0], &gd[1]], alpha, sigma2).unwrap();
            worst_schur = worst_schur.max(rel(closed.value, schur));
        }
    }
    outcome(
        worst_fd < 1e-5 && worst_schur < 1e-8,
        format!(
            "derivatives vs finite differences {worst_fd:.2e} (< 1e-5), \
             equivalent FIM vs Schur complement {worst_schur:.2e} (< 1e-8)"
        ),
    )
}

/// Greedy detector at every step over Rayleigh gains. Only `<r_l, y>` enters
/// the statistic, so the noise term is drawn as that scalar directly:
/// `<r, e> ~ CN(0, sigma^2 / 2 ||r||^2)`.
fn detector_monte_carlo() -> Outcome {
    let scene = Scene::new(&ExperimentConfig::default(), 0.1).unwrap();
    let sigma2 = scene.sigma2();
    let trials = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst_z: f64 = 0.0;
    let mut checks = 0;
    let streams = [
        (scene.atoms_nonris(), scene.gains.rayleigh_scale_nonris.clone()),
        (scene.atoms_ris(), scene.gains.rayleigh_scale_ris.clone()),
    ];
    for (atoms, scales) in &streams {
        let order = detection_order(atoms, scales);
        let g: Vec<CVector> = order.iter().map(|&i| atoms[i].clone()).collect();
        let s: Vec<f64> = order.iter().map(|&i| scales[i]).collect();
        for l in 0..g.len() {
            let basis = orthonormal_basis(&g[..l]).unwrap();
            let r = project_out(&basis, &g[l]);
            let rr = r.norm_squared();
            let proj: Vec<Complex64> = g.iter().map(|gi| inner(&r, gi)).collect();
            let stats: Vec<f64> = (0..trials)
                .map(|_| {
                    let mut v = cn(&mut rng, sigma2 / 2.0 * rr);
                    for (p, sc) in proj.iter().zip(&s) {
                        v += p * cn(&mut rng, 2.0 * sc * sc);
                    }
                    4.0 * v.norm_sqr() / (sigma2 * rr)
                })
                .collect();
            for p_fa in [1e-1, 1e-2, 1e-3] {
                let gamma = threshold(p_fa);
                let hits = stats.iter().filter(|&&t| t > gamma).count() as f64 / trials as f64;
                let e = expected_pd(&g, &s, sigma2, l, p_fa).unwrap();
                let sd = (e * (1.0 - e) / trials as f64).sqrt().max(1.0 / trials as f64);
                worst_z = worst_z.max((hits - e).abs() / sd);
                checks += 1;
            }
        }
    }
    outcome(
        worst_z < 3.0,
        format!("{checks} (stream, target, p_fa) cells with 1e5 trials each, worst deviation {worst_z:.2} sigma (< 3)"),
    )
}

/// Two unit atoms with coherence `c` and a second-target SNR
/// `|alpha_2|^2 ||g_2||^2 / sigma^2 = snr`.
fn two_target_mu(c: f64, snr: f64) -> f64 {
    let g1 = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let g2 = CVector::from_vec(vec![Complex64::new(c.sqrt(), 0.0), Complex64::new((1.0 - c).sqrt(), 0.0)]);
    let gains = [Complex64::new(1.0, 0.0), Complex64::new(snr.sqrt(), 0.0)];
    noncentrality(&[g1, g2], &gains, 1.0, 1).unwrap().mu
}

fn auc_at_coherence() -> Outcome {
    let t = Instant::now();
    let auc = ris_radar::detection::auc_from_noncentrality(two_target_mu(0.9, 1000.0));
    let ms = t.elapsed().as_secs_f64() * 1e3;
    outcome(
        auc >= 0.99 && ms < 1000.0,
        format!("SNR 30 dB, coherence 0.9: AUC {auc:.6} (>= 0.99), {ms:.1} ms"),
    )
}

fn required_snr_gap() -> Outcome {
    let required = |c: f64| {
        // pd grows with SNR; bisect in dB
        let (mut lo, mut hi) = (-20.0_f64, 80.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pd_from_noncentrality(two_target_mu(c, 10f64.powf(mid / 10.0)), 1e-3) >= 0.99 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let (a, b) = (required(0.1), required(0.9));
    let gap = b - a;
    outcome(
        (gap - 10.0).abs() <= 1.0,
        format!("required SNR {a:.2} dB at C = 0.1, {b:.2} dB at C = 0.9, gap {gap:.2} dB (10 +- 1)"),
    )
}

fn bound_trend() -> Outcome {
    let t = Instant::now();
    let cfg = ExperimentConfig::default();
    let deltas = [0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14];
    let mut auc_n = Vec::new();
    let mut auc_r = Vec::new();
    for &d in &deltas {
        let rows = detection_bound_rows(&cfg, &Scene::new(&cfg, d).unwrap()).unwrap();
        let pick = |signal: &str| rows.iter().find(|r| r.target == 2 && r.signal == signal).unwrap().auc;
        auc_n.push(pick("nonris"));
        auc_r.push(pick("ris"));
    }
    let secs = t.elapsed().as_secs_f64();
    let ris_ok = auc_r[0] >= 0.99;
    let first_n = deltas.iter().zip(&auc_n).find(|(_, a)| **a >= 0.99).map(|(d, _)| *d);
    let nonris_ok = matches!(first_n, Some(d) if d >= 0.1 - 1e-12);
    let fmt = |v: &[f64]| v.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>().join(" ");
    outcome(
        ris_ok && nonris_ok && secs < 60.0,
        format!(
            "target 2 expected AUC over delta 0.02..0.14: RIS [{}], non-RIS [{}]; \
             RIS >= 0.99 at 0.02: {ris_ok}; non-RIS first >= 0.99 at {:?} (want >= 0.1); {secs:.2} s",
            fmt(&auc_r),
            fmt(&auc_n),
            first_n
        ),
    )
}

fn sense_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    let th = noise_threshold(&cfg.scenario, 3.09);
    cfg.estimator.threshold_nonris = th;
    cfg.estimator.threshold_ris = th;
    cfg
}

fn empirical_auc_gap(points: &[SensePoint]) -> Outcome {
    let p = points.iter().find(|p| (p.delta - 0.1).abs() < 1e-12).unwrap();
    let n = sense::auc(p, 0, 2).unwrap();
    let r = sense::auc(p, 1, 2).unwrap();
    let j = sense::auc(p, 2, 2).unwrap();
    outcome(
        (n - 0.55).abs() <= 0.07 && (r - 0.95).abs() <= 0.05,
        format!(
            "delta 0.1, {} trials, target 3 empirical AUC: non-RIS {n:.3} (0.55 +- 0.07), \
             RIS {r:.3} (0.95 +- 0.05), joint {j:.3}",
            p.trials.len()
        ),
    )
}

fn gospa_sweep(points: &[SensePoint]) -> Outcome {
    let g: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| (p.delta, sense::gospa_summary(p, 0).0, sense::gospa_summary(p, 2).0))
        .collect();
    let ordered = g.iter().all(|&(_, n, j)| j < n);
    let (d_peak, n_peak, j_peak) = g
        .iter()
        .copied()
        .max_by(|a, b| ((a.1 - a.2) / a.1).total_cmp(&((b.1 - b.2) / b.1)))
        .unwrap();
    let improvement = (n_peak - j_peak) / n_peak;
    let near = (0.06 - 1e-12..=0.1 + 1e-12).contains(&d_peak);
    let best_small = g.iter().filter(|x| x.0 <= 0.1 + 1e-12).map(|x| x.2).fold(f64::INFINITY, f64::min);
    let degrades = g.iter().filter(|x| x.0 > 0.1 + 1e-12).all(|x| x.2 > best_small);
    let table = g
        .iter()
        .map(|(d, n, j)| format!("{d:.2}: {n:.2}/{j:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        ordered && near && improvement >= 0.4 && degrades,
        format!(
            "mean GOSPA non-RIS/RIS-assisted [{table}]; peak improvement {:.1} % ({:.2} m) at delta {d_peak:.2} \
             (>= 40 % near 0.08); RIS-assisted below non-RIS everywhere: {ordered}; worse beyond 0.1: {degrades}",
            100.0 * improvement,
            n_peak - j_peak
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fisher_ordering() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.trials = 500;
    let scene = Scene::new(&cfg, 0.1).unwrap();
    let rows = fisher_rows(&cfg, &scene, 0).unwrap();
    let med = |t: usize, metric: &str, signal: &str| {
        median(
            rows.iter()
                .filter(|r| r.target == t && r.metric == metric && r.signal == signal)
                .map(|r| r.value)
                .collect(),
        )
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for t in 1..=scene.targets.len() {
        let (dn, dr) = (med(t, "deb", "nonris"), med(t, "deb", "ris"));
        let (an, ar) = (med(t, "aeb", "nonris"), med(t, "aeb", "ris"));
        let pj = med(t, "peb", "joint");
        let pmin = median(
            rows.iter()
                .filter(|r| r.target == t && r.metric == "peb" && r.signal == "nonris")
                .zip(rows.iter().filter(|r| r.target == t && r.metric == "peb" && r.signal == "ris"))
                .map(|(a, b)| a.value.min(b.value))
                .collect(),
        );
        let ok = [dn < dr, ar < an, pj <= pmin];
        pass &= ok.iter().all(|x| *x);
        parts.push(format!(
            "target {t}: DEB n {dn:.3e} < r {dr:.3e} {}; AEB r {ar:.3e} < n {an:.3e} {}; PEB joint {pj:.3e} <= min {pmin:.3e} {}",
            ok[0], ok[1], ok[2]
        ));
    }
    outcome(pass, format!("delta 0.1, 500 gain draws; {}", parts.join("; ")))
}

fn noiseless_on_grid() -> Outcome {
    let m = default_model();
    let s = &m.scenario;
    let cfg = EstimatorConfig::default();
    let mut est = Estimator::new(&m, cfg).unwrap();
    let d = est.nonris.clone();
    let (nd, na, ne) = (d.delays.len() - 1, d.az.len() - 1, d.el.len() - 1);
    let etas = [
        [d.delays[0], d.az[0], d.el[ne]],
        [d.delays[0], d.az[na], d.el[0]],
        [d.delays[nd], d.az[na], d.el[ne]],
    ];
    let positions: Vec<Vector3<f64>> = etas.iter().map(|e| invert_nonris(*e, s).unwrap()).collect();
    let targets = TargetSet::new(positions.clone(), vec![50.0, 5.0, 0.5]).unwrap();
    let params = channel_params(s, &targets).unwrap();
    let ris_points: Vec<[f64; 3]> = params.targets.iter().map(|p| [p.tau_bar, p.phi[0], p.phi[1]]).collect();
    est.ris = Dictionary::for_region_through(&m, DictionaryKind::Ris, &cfg.dictionary, &ris_points).unwrap();
    let gains = path_gains(s, &targets, 5).unwrap();
    let block = m.synthesize(&params, &gains, 0, false).unwrap();
    let (yn, yr) = (block.y_nonris.norm(), block.y_ris.norm());
    let (th_n, th_r) = (1e-10 * yn, 1e-10 * yr);
    let (rn, rr) = est.pursue_with(&block, th_n, th_r).unwrap();
    let out = est.finish(&m, &rn, &rr, th_n, th_r);
    // smallest cell diagonal of the non-RIS grid around the targets
    let step = [d.delays[1] - d.delays[0], d.az[1] - d.az[0], d.el[1] - d.el[0]];
    let cell = etas
        .iter()
        .map(|e| {
            let c0 = invert_nonris(*e, s).unwrap();
            let sign = |k: usize, lo: f64| if e[k] > lo + step[k] { -1.0 } else { 1.0 };
            let c1 = invert_nonris(
                [
                    e[0] + sign(0, d.delays[0]) * step[0],
                    e[1] + sign(1, d.az[0]) * step[1],
                    e[2] + sign(2, d.el[0]) * step[2],
                ],
                s,
            )
            .unwrap();
            (c1 - c0).norm()
        })
        .fold(f64::INFINITY, f64::min);
    let est_pos: Vec<Vector3<f64>> = out.positions.iter().map(|p| p.position).collect();
    let worst = positions
        .iter()
        .map(|c| est_pos.iter().map(|e| (e - c).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let res = (out.residual_nonris / yn).max(out.residual_ris / yr);
    outcome(
        out.l_hat == 3 && est_pos.len() == 3 && worst < cell && res <= 1e-10,
        format!(
            "L_hat {}, worst position error {worst:.2e} m (cell diameter {cell:.3} m), \
             relative OMP residual {res:.2e} (<= 1e-10)",
            out.l_hat
        ),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 7;
    cfg.trials = 3;
    cfg.deltas = vec![0.06, 0.1];
    let mut identical = true;
    let mut files = 0;
    for kind in [Experiment::Sense, Experiment::DetectionBound, Experiment::FisherCdf, Experiment::WorkingPrinciple] {
        let a = tmp.path().join(format!("{}-a", kind.name()));
        let b = tmp.path().join(format!("{}-b", kind.name()));
        run(kind, &cfg, &a).unwrap();
        run(kind, &cfg, &b).unwrap();
        let (fa, fb) = (dir_bytes(&a), dir_bytes(&b));
        files += fa.len();
        identical &= fa == fb;
    }
    // one trial re-run on its own reproduces its outcome
    let scene = Scene::new(&cfg, 0.1).unwrap();
    let est = sense::estimator(&cfg, &scene).unwrap();
    let all = sense::run_point(&cfg, 1, 0.1).unwrap();
    let alone = sense::run_trial(&cfg, &scene, &est, 1, 2).unwrap();
    let isolated = alone.l_hat == all.trials[2].l_hat && alone.gospa == all.trials[2].gospa;
    outcome(
        identical && isolated,
        format!("{files} files byte-identical across two runs: {identical}; isolated trial reproduces: {isolated}"),
    )
}

fn main() {
    let m = default_model();
    let t = Instant::now();
    let points: Vec<SensePoint> = {
        let cfg = sense_config();
        cfg.deltas.iter().enumerate().map(|(i, &d)| sense::run_point(&cfg, i, d).unwrap()).collect()
    };
    let sense_secs = t.elapsed().as_secs_f64();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("three-target closed forms", Box::new(closed_forms)),
        ("coherence factorization", Box::new(|| coherence_factorization(&m))),
        ("derivatives and equivalent FIM", Box::new(|| derivatives_and_equivalent_fim(&m))),
        ("expected pd vs greedy detector", Box::new(detector_monte_carlo)),
        ("two-target AUC at coherence 0.9", Box::new(auc_at_coherence)),
        ("required SNR gap", Box::new(required_snr_gap)),
        ("expected AUC against spacing", Box::new(bound_trend)),
        ("empirical AUC of target 3", Box::new(|| empirical_auc_gap(&points))),
        ("GOSPA against spacing", Box::new(|| gospa_sweep(&points))),
        ("bound ordering", Box::new(fisher_ordering)),
        ("noiseless on-grid recovery", Box::new(noiseless_on_grid)),
        ("determinism", Box::new(determinism)),
    ];
    println!("sense sweep: {} spacings x {} trials in {sense_secs:.1} s", points.len(), points[0].trials.len());
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}: {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
