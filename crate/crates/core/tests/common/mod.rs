#![allow(dead_code)]

use std::sync::LazyLock;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use ris_radar::geometry::Scenario;
use ris_radar::linalg::CVector;
use ris_radar::signal::{ResolutionRegion, ScheduleMode, SignalModel};

/// Default scenario, reference region, 5 x 5 focused sweep.
pub static DEFAULT_MODEL: LazyLock<SignalModel> = LazyLock::new(|| {
    let s = Scenario::table_one();
    let r = ResolutionRegion::reference(&s).unwrap();
    SignalModel::new(&s, &r, 5, 5, ScheduleMode::Focused).unwrap()
});

/// Reduced dimensions for Monte Carlo heavy tests.
pub static SMALL_MODEL: LazyLock<SignalModel> = LazyLock::new(|| {
    let mut s = Scenario::table_one();
    s.n_subcarriers = 12;
    s.n_symbols = 8;
    s.ris_array = (10, 10);
    let r = ResolutionRegion::reference(&s).unwrap();
    SignalModel::new(&s, &r, 2, 2, ScheduleMode::Focused).unwrap()
});

pub fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sd, im * sd)
}

pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> CVector {
    CVector::from_iterator(n, (0..n).map(|_| cn(rng, var)))
}

pub fn rel_err(a: &CVector, b: &CVector) -> f64 {
    (a - b).norm() / b.norm()
}

/// Point inside the reference region, `(tau, theta_az, theta_el)`.
pub fn random_eta<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    [
        rng.random_range(112e-9..128e-9),
        rng.random_range(0.55..0.85),
        rng.random_range(0.65..0.95),
    ]
}
