mod common;

use common::{cn, cn_vector, random_eta, DEFAULT_MODEL};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ris_radar::detection::{
    coherence, conditional_pd, expected_pd, marcum_q1, noncentrality, nonris_coherence_factors, ris_coherence_factors,
    three, threshold,
};
use ris_radar::geometry::{invert_nonris, target_params};
use ris_radar::linalg::{inner, orthonormal_basis, project_out, CVector};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn three_target_closed_forms_match_projector_formulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for draw in 0..200 {
        let n = 6 + draw % 5;
        let g: Vec<CVector> = (0..3).map(|_| cn_vector(&mut rng, n, 1.0)).collect();
        let alpha = [cn(&mut rng, 1.0), cn(&mut rng, 1.0), cn(&mut rng, 1.0)];
        let sigma2 = 0.3;
        let closed = three::noncentralities([&g[0], &g[1], &g[2]], alpha, sigma2).unwrap();
        let scales = [1.3, 0.7, 0.4];
        let p_fa = 1e-2;
        let closed_pd = three::expected_pds([&g[0], &g[1], &g[2]], scales, sigma2, p_fa).unwrap();
        for l in 0..3 {
            let general = noncentrality(&g, &alpha, sigma2, l).unwrap().mu;
            worst = worst.max(rel(closed[l], general));
            let pd = expected_pd(&g, &scales, sigma2, l, p_fa).unwrap();
            worst = worst.max(rel(closed_pd[l], pd));
        }
    }
    assert!(worst < 1e-8, "worst relative error {worst}");
}

#[test]
fn coherence_factorizes_into_angle_and_delay_terms() {
    let m = &*DEFAULT_MODEL;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (el, ek) = (random_eta(&mut rng), random_eta(&mut rng));
        let (a, d) = nonris_coherence_factors(m, el, ek);
        let c = coherence(&m.atom_nonris(el), &m.atom_nonris(ek)).unwrap();
        worst = worst.max(rel(a * d, c));
        let rl = target_params(&m.scenario, &invert_nonris(el, &m.scenario).unwrap()).unwrap().ris();
        let rk = target_params(&m.scenario, &invert_nonris(ek, &m.scenario).unwrap()).unwrap().ris();
        let (v, d) = ris_coherence_factors(m, rl, rk);
        let c = coherence(&m.atom_ris(rl), &m.atom_ris(rk)).unwrap();
        worst = worst.max(rel(v * d, c));
    }
    assert!(worst < 1e-10, "worst relative error {worst}");
}

#[test]
fn marcum_q_matches_noncentral_chi_square_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200_000;
    for (a, b) in [(1.0, 2.0), (3.0, 2.5), (0.5, 0.3)] {
        let hits = (0..n)
            .filter(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                (x + a).powi(2) + y * y > b * b
            })
            .count();
        let p = hits as f64 / n as f64;
        let q = marcum_q1(a, b);
        let sd = (q * (1.0 - q) / n as f64).sqrt();
        assert!((p - q).abs() < 4.0 * sd, "Q1({a},{b}) = {q}, sampled {p}");
    }
}

/// Test statistic of the greedy detector at step `l` with the true atoms.
fn statistic(atoms: &[CVector], l: usize, y: &CVector, sigma2: f64) -> f64 {
    let basis = orthonormal_basis(&atoms[..l]).unwrap();
    let r = project_out(&basis, &atoms[l]);
    4.0 * inner(&r, y).norm_sqr() / (sigma2 * r.norm_squared())
}

#[test]
fn conditional_pd_matches_greedy_detector_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 12;
    let atoms: Vec<CVector> = (0..3).map(|_| cn_vector(&mut rng, n, 1.0)).collect();
    let alpha = [Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.4), Complex64::new(0.2, -0.1)];
    let sigma2 = 1.0;
    let mean: CVector = atoms.iter().zip(&alpha).fold(CVector::zeros(n), |acc, (g, a)| acc + g * *a);
    let trials = 40_000;
    let p_fa = 0.05;
    let gamma = threshold(p_fa);
    for l in 0..3 {
        let hits = (0..trials)
            .filter(|_| statistic(&atoms, l, &(&mean + cn_vector(&mut rng, n, sigma2 / 2.0)), sigma2) > gamma)
            .count();
        let p = hits as f64 / trials as f64;
        let pd = conditional_pd(&atoms, &alpha, sigma2, l, p_fa).unwrap();
        let sd = (pd * (1.0 - pd) / trials as f64).sqrt();
        assert!((p - pd).abs() < 3.0 * sd.max(1e-4), "target {l}: {pd} vs {p}");
    }
}

#[test]
fn expected_pd_matches_rayleigh_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10;
    let atoms: Vec<CVector> = (0..3).map(|_| cn_vector(&mut rng, n, 1.0)).collect();
    let scales = [0.8, 0.4, 0.3];
    let sigma2 = 1.0;
    let trials = 20_000;
    for p_fa in [1e-1, 1e-2, 1e-3] {
        for l in 0..3 {
            let mut vals = Vec::with_capacity(trials);
            for _ in 0..trials {
                let alpha: Vec<Complex64> = scales.iter().map(|s| cn(&mut rng, 2.0 * s * s)).collect();
                vals.push(conditional_pd(&atoms, &alpha, sigma2, l, p_fa).unwrap());
            }
            let m = vals.iter().sum::<f64>() / trials as f64;
            let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (trials - 1) as f64 / trials as f64).sqrt();
            let e = expected_pd(&atoms, &scales, sigma2, l, p_fa).unwrap();
            assert!((m - e).abs() < 4.0 * sd + 1e-12, "p_fa {p_fa} target {l}: {e} vs {m}");
        }
    }
}
