mod common;

use common::{cn, cn_vector, rel_err, random_eta, SMALL_MODEL, DEFAULT_MODEL};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_radar::detection::{coherence, generalized_coherence};
use ris_radar::fisher::{
    atom_derivatives_nonris, atom_derivatives_ris, bounds, efim, equivalent_fim, equivalent_fim_case_study,
    equivalent_fim_schur, fim, nonris_columns, ris_columns, CaseStudyParam, FisherGeometry,
};
use ris_radar::geometry::{channel_params, invert_nonris, target_params, PathGains, TargetSet};
use ris_radar::linalg::CVector;
use ris_radar::signal::SignalModel;

const J: Complex64 = Complex64::new(0.0, 1.0);

fn central_difference(f: impl Fn(f64) -> CVector, x: f64, h: f64) -> CVector {
    (f(x + h) - f(x - h)) / Complex64::new(2.0 * h, 0.0)
}

fn random_ris_eta(model: &SignalModel, rng: &mut ChaCha8Rng) -> [f64; 5] {
    let c = invert_nonris(random_eta(rng), &model.scenario).unwrap();
    target_params(&model.scenario, &c).unwrap().ris()
}

#[test]
fn nonris_derivatives_match_finite_differences() {
    let m = &*DEFAULT_MODEL;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h_tau = 1e-7 / m.scenario.bandwidth();
    let h = 1e-7;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let eta = random_eta(&mut rng);
        let d = atom_derivatives_nonris(m, eta);
        let fd_tau = central_difference(|t| m.atom_nonris([t, eta[1], eta[2]]), eta[0], h_tau);
        let fd_az = central_difference(|a| m.atom_nonris([eta[0], a, eta[2]]), eta[1], h);
        let fd_el = central_difference(|e| m.atom_nonris([eta[0], eta[1], e]), eta[2], h);
        worst = worst
            .max(rel_err(&fd_tau, &d.d_tau))
            .max(rel_err(&fd_az, &d.d_az))
            .max(rel_err(&fd_el, &d.d_el));
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn ris_derivatives_match_finite_differences() {
    let m = &*DEFAULT_MODEL;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h_tau = 1e-7 / m.scenario.bandwidth();
    let h = 1e-7;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let eta = random_ris_eta(m, &mut rng);
        let d = atom_derivatives_ris(m, eta);
        let along = |k: usize, step: f64| {
            central_difference(
                |x| {
                    let mut e = eta;
                    e[k] = x;
                    m.atom_ris(e)
                },
                eta[k],
                step,
            )
        };
        let analytic = [&d.d_theta[0], &d.d_theta[1], &d.d_tau, &d.d_phi[0], &d.d_phi[1]];
        for (k, a) in analytic.iter().enumerate() {
            let step = if k == 2 { h_tau } else { h };
            worst = worst.max(rel_err(&along(k, step), a));
        }
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn delay_derivative_entries_scale_with_subcarrier_index() {
    let m = &*DEFAULT_MODEL;
    let s = &m.scenario;
    let d = atom_derivatives_nonris(m, [118e-9, 0.66, 0.83]);
    let (n_sub, n_u) = (s.n_subcarriers, s.n_ue());
    for t in [0, 7, s.n_profiles() - 1] {
        for n in 0..n_sub {
            for k in 0..n_u {
                let i = (t * n_sub + n) * n_u + k;
                let expect = 2.0 * std::f64::consts::PI * s.delta_f * n as f64 * d.g[i].norm();
                assert!((d.d_tau[i].norm() - expect).abs() <= 1e-9 * expect.max(1e-30));
            }
        }
    }
}

#[test]
fn ris_ue_angle_derivative_only_rescales_the_atom() {
    let m = &*DEFAULT_MODEL;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let eta = random_ris_eta(m, &mut rng);
    let d = atom_derivatives_ris(m, eta);
    let p = m.precoder_gain([eta[0], eta[1]]);
    let dp = m.precoder_gain_gradient([eta[0], eta[1]]);
    for k in 0..2 {
        let expect = &d.g * (dp[k] / p);
        assert!(rel_err(&d.d_theta[k], &expect) < 1e-12);
    }
}

#[test]
fn equivalent_fim_equals_schur_complement() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let m = &*DEFAULT_MODEL;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let c1 = invert_nonris(random_eta(&mut rng), &m.scenario).unwrap();
        let c2 = invert_nonris(random_eta(&mut rng), &m.scenario).unwrap();
        let t1 = target_params(&m.scenario, &c1).unwrap();
        let t2 = target_params(&m.scenario, &c2).unwrap();
        let alpha = [cn(&mut rng, 1.0), cn(&mut rng, 1.0)];
        let sigma2 = 1e-3;
        for which in [CaseStudyParam::NonRisAzimuth, CaseStudyParam::RisAzimuth] {
            let closed = equivalent_fim_case_study(m, which, [&t1, &t2], alpha, sigma2).unwrap();
            let (g, gd) = match which {
                CaseStudyParam::NonRisAzimuth => {
                    let a = atom_derivatives_nonris(m, t1.nonris());
                    let b = atom_derivatives_nonris(m, t2.nonris());
                    ([a.g, b.g], [a.d_az, b.d_az])
                }
                CaseStudyParam::RisAzimuth => {
                    let a = atom_derivatives_ris(m, t1.ris());
                    let b = atom_derivatives_ris(m, t2.ris());
                    let [pa, _] = a.d_phi;
                    let [pb, _] = b.d_phi;
                    ([a.g, b.g], [pa, pb])
                }
            };
            let schur = equivalent_fim_schur([&g[0], &g[1]], [&gd[0], &gd[1]], alpha, sigma2).unwrap();
            worst = worst.max((closed.value - schur).abs() / schur.abs());
            let c = generalized_coherence(&g[0], &g[1], &gd[0]).unwrap();
            assert!((closed.il_alpha - c).abs() < 1e-10);
        }
    }
    assert!(worst < 1e-8, "worst relative error {worst}");
}

#[test]
fn equivalent_fim_schur_with_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let v: Vec<CVector> = (0..4).map(|_| cn_vector(&mut rng, 9, 1.0)).collect();
        let alpha = [cn(&mut rng, 1.0), cn(&mut rng, 1.0)];
        let closed = equivalent_fim([&v[0], &v[1]], [&v[2], &v[3]], alpha, 0.5).unwrap();
        let schur = equivalent_fim_schur([&v[0], &v[1]], [&v[2], &v[3]], alpha, 0.5).unwrap();
        assert!((closed.value - schur).abs() <= 1e-8 * schur.abs(), "{} vs {schur}", closed.value);
    }
}

#[test]
fn equivalent_fim_without_cross_coherence_is_maximal() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let n = 8;
    let e = |i: usize| {
        let mut v = CVector::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        v
    };
    // g1 and its derivative share a direction; g2 and d2 are orthogonal to both.
    let g1 = e(0) * Complex64::new(2.0, 0.0);
    let d1 = e(0) * Complex64::new(0.3, 0.4) + e(1) * Complex64::new(1.5, 0.0);
    let g2 = e(2) + e(3) * J;
    let d2 = e(4) * Complex64::new(0.7, -0.2);
    for v in [(&g1, &g2), (&g1, &d2), (&g2, &d1), (&d1, &d2)] {
        assert_eq!(coherence(v.0, v.1).unwrap(), 0.0);
    }
    let alpha = [cn(&mut rng, 1.0), cn(&mut rng, 1.0)];
    let sigma2 = 0.2;
    let got = equivalent_fim([&g1, &g2], [&d1, &d2], alpha, sigma2).unwrap().value;
    let expect = 4.0 * alpha[0].norm_sqr() / sigma2 * d1.norm_squared() * (1.0 - coherence(&g1, &d1).unwrap());
    assert!((got - expect).abs() < 1e-12 * expect);
}

#[test]
fn score_outer_products_average_to_the_fim() {
    let m = &*SMALL_MODEL;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let d = atom_derivatives_nonris(m, [121e-9, 0.68, 0.82]);
    let alpha = [Complex64::new(0.8, -0.6)];
    let cols = nonris_columns(std::slice::from_ref(&d), &alpha);
    let sigma2 = 0.7;
    let f = fim(&cols, sigma2);
    let k = cols.len();
    let mut s = DMatrix::<f64>::zeros(k, k);
    let trials = 10_000;
    for _ in 0..trials {
        // separated-stream noise has variance sigma2 / 2
        let w = cn_vector(&mut rng, cols[0].len(), sigma2 / 2.0);
        let score = DMatrix::from_fn(k, 1, |i, _| 4.0 / sigma2 * cols[i].dotc(&w).re);
        s += &score * score.transpose();
    }
    s /= trials as f64;
    let dinv = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 / f[(i, i)].sqrt() } else { 0.0 });
    let fe = &dinv * &f * &dinv;
    let se = &dinv * &s * &dinv;
    let err = (&se - &fe).norm() / fe.norm();
    assert!(err < 0.03, "relative deviation {err}");
}

fn cluster_geometry(model: &SignalModel, delta: f64) -> (FisherGeometry, PathGains, TargetSet) {
    let targets = TargetSet::cluster(&model.scenario, delta).unwrap();
    let params = channel_params(&model.scenario, &targets).unwrap();
    let geo = FisherGeometry::new(model, &params, &targets.positions).unwrap();
    let gains = PathGains::amplitudes(&model.scenario, &targets).unwrap();
    (geo, gains, targets)
}

#[test]
fn geometry_fim_matches_direct_columns_for_the_cluster() {
    let m = &*DEFAULT_MODEL;
    let targets = TargetSet::cluster(&m.scenario, 0.1).unwrap();
    let params = channel_params(&m.scenario, &targets).unwrap();
    let geo = FisherGeometry::new(m, &params, &targets.positions).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let alpha: Vec<Complex64> = (0..3).map(|_| cn(&mut rng, 1e-12)).collect();
    let dn: Vec<_> = params.targets.iter().map(|p| atom_derivatives_nonris(m, p.nonris())).collect();
    let dr: Vec<_> = params.targets.iter().map(|p| atom_derivatives_ris(m, p.ris())).collect();
    let sigma2 = m.scenario.noise_var();
    let a = fim(&nonris_columns(&dn, &alpha), sigma2);
    let b = geo.fim_nonris(&alpha, sigma2);
    assert!((&a - &b).amax() <= 1e-10 * a.amax());
    let a = fim(&ris_columns(&dr, &alpha), sigma2);
    let b = geo.fim_ris(&alpha, sigma2);
    assert!((&a - &b).amax() <= 1e-10 * a.amax());
}

#[test]
fn joint_euclidean_information_is_additive_and_dominates() {
    let m = &*DEFAULT_MODEL;
    let (geo, mut gains, targets) = cluster_geometry(m, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..20 {
        gains.draw(&targets.rcs, &mut rng);
        let r = geo.report(&gains.alpha, &gains.alpha_bar, m.scenario.noise_var()).unwrap();
        // three equal-delay points are not separable by four antennas alone
        assert!(r.singular_nonris && !r.singular_ris);
        assert!(r.deb_n.iter().all(|v| v.is_finite()));
        assert!(r.peb_n.iter().all(|v| v.is_infinite()));
        assert!(r.peb_joint.iter().all(|v| v.is_finite()));
        assert_eq!(r.fim_euc_joint, &r.fim_euc_n + &r.fim_euc_r);
        for l in 0..3 {
            assert!(r.peb_joint[l] <= r.peb_n[l].min(r.peb_r[l]) * (1.0 + 1e-9));
        }
        let scale = r.fim_ris.diagonal().amax();
        assert!(r.ris_theta_information <= 1e-8 * scale);
    }
}

#[test]
fn coincident_in_phase_targets_give_infinite_bounds() {
    let m = &*DEFAULT_MODEL;
    let c = invert_nonris([120e-9, 0.7, 0.8], &m.scenario).unwrap();
    let targets = TargetSet::new(vec![c, c], vec![1.0, 1.0]).unwrap();
    let params = channel_params(&m.scenario, &targets).unwrap();
    let geo = FisherGeometry::new(m, &params, &targets.positions).unwrap();
    // in-phase gains make the two paths indistinguishable
    let a = [Complex64::new(1e-6, 0.0), Complex64::new(2e-6, 0.0)];
    let r = geo.report(&a, &a, m.scenario.noise_var()).unwrap();
    assert!(r.singular_nonris && r.singular_ris);
    assert!(r.deb_n.iter().chain(&r.peb_joint).all(|v| v.is_infinite()), "{:?} {:?}", r.deb_n, r.peb_joint);
}

#[test]
fn bounds_reject_mismatched_dimensions() {
    let f = DMatrix::identity(5, 5);
    assert!(bounds(f.clone(), f, &[]).is_err());
}

fn psd_min_eig(f: &DMatrix<f64>) -> f64 {
    f.clone().symmetric_eigen().eigenvalues.min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fims_are_symmetric_psd(seed in any::<u64>()) {
        let m = &*SMALL_MODEL;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = rng.random_range(1..=3);
        let etas: Vec<[f64; 3]> = (0..l).map(|_| random_eta(&mut rng)).collect();
        let alpha: Vec<Complex64> = (0..l).map(|_| cn(&mut rng, 1.0)).collect();
        let dn: Vec<_> = etas.iter().map(|e| atom_derivatives_nonris(m, *e)).collect();
        let dr: Vec<_> = etas
            .iter()
            .map(|e| {
                let c = invert_nonris(*e, &m.scenario).unwrap();
                atom_derivatives_ris(m, target_params(&m.scenario, &c).unwrap().ris())
            })
            .collect();
        for f in [fim(&nonris_columns(&dn, &alpha), 1.0), fim(&ris_columns(&dr, &alpha), 1.0)] {
            prop_assert_eq!(&f, &f.transpose());
            prop_assert!(psd_min_eig(&f) > -1e-8 * f.trace());
        }
    }

    #[test]
    fn geometric_efim_invariant_to_global_phase(seed in any::<u64>(), psi in 0.0..std::f64::consts::TAU) {
        let m = &*SMALL_MODEL;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let etas = [random_eta(&mut rng), random_eta(&mut rng)];
        let alpha: Vec<Complex64> = (0..2).map(|_| cn(&mut rng, 1.0)).collect();
        let rot: Vec<Complex64> = alpha.iter().map(|a| a * Complex64::from_polar(1.0, psi)).collect();
        let dn: Vec<_> = etas.iter().map(|e| atom_derivatives_nonris(m, *e)).collect();
        let keep: Vec<usize> = (4..10).collect();
        let a = efim(&fim(&nonris_columns(&dn, &alpha), 1.0), &keep);
        let b = efim(&fim(&nonris_columns(&dn, &rot), 1.0), &keep);
        prop_assert!((&a - &b).amax() <= 1e-6 * a.amax());
    }

    #[test]
    fn efim_never_exceeds_the_geometric_block(seed in any::<u64>()) {
        let m = &*SMALL_MODEL;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let etas = [random_eta(&mut rng), random_eta(&mut rng)];
        let alpha: Vec<Complex64> = (0..2).map(|_| cn(&mut rng, 1.0)).collect();
        let dn: Vec<_> = etas.iter().map(|e| atom_derivatives_nonris(m, *e)).collect();
        let f = fim(&nonris_columns(&dn, &alpha), 1.0);
        let keep: Vec<usize> = (4..10).collect();
        let e = efim(&f, &keep);
        let block = DMatrix::from_fn(6, 6, |i, j| f[(keep[i], keep[j])]);
        // compare in the block's own scaling
        let d = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 / block[(i, i)].sqrt() } else { 0.0 });
        let diff = &d * (&block - &e) * &d;
        prop_assert!(psd_min_eig(&diff) > -1e-8);
    }

    #[test]
    fn squared_bounds_halve_when_energy_doubles(seed in any::<u64>()) {
        let m = &*DEFAULT_MODEL;
        let targets = TargetSet::cluster(&m.scenario, 0.1).unwrap();
        let params = channel_params(&m.scenario, &targets).unwrap();
        let geo = FisherGeometry::new(m, &params, &targets.positions).unwrap();
        let mut gains = PathGains::amplitudes(&m.scenario, &targets).unwrap();
        gains.draw(&targets.rcs, &mut ChaCha8Rng::seed_from_u64(seed));
        let s2 = std::f64::consts::SQRT_2;
        let up = |v: &[Complex64]| v.iter().map(|a| a * s2).collect::<Vec<_>>();
        let sigma2 = m.scenario.noise_var();
        let a = geo.report(&gains.alpha, &gains.alpha_bar, sigma2).unwrap();
        let b = geo.report(&up(&gains.alpha), &up(&gains.alpha_bar), sigma2).unwrap();
        let pairs = [
            (&a.peb_n, &b.peb_n),
            (&a.peb_r, &b.peb_r),
            (&a.peb_joint, &b.peb_joint),
            (&a.deb_n, &b.deb_n),
            (&a.aeb_r, &b.aeb_r),
        ];
        for (x, y) in pairs {
            for (p, q) in x.iter().zip(y.iter()) {
                if p.is_infinite() {
                    prop_assert!(q.is_infinite());
                } else {
                    prop_assert!((q * q * 2.0 - p * p).abs() <= 1e-6 * p * p);
                }
            }
        }
    }
}
