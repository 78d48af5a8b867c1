use nalgebra::Matrix3xX;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::{angles_of, ChannelParams, PathGains, Scenario, SPEED_OF_LIGHT};
use crate::linalg::CVector;

use super::{
    array_response, array_response_gradient, build_precoder, build_schedule, delay_response,
    KronAtom, ResolutionRegion, RisSchedule, ScheduleMode,
};

/// Everything needed to evaluate atoms and synthesize observations for one
/// scenario, region, precoder and RIS sweep.
#[derive(Debug, Clone)]
pub struct SignalModel {
    pub scenario: Scenario,
    pub region: ResolutionRegion,
    pub precoder: CVector,
    pub schedule: RisSchedule,
    /// Direction of the RIS at the UE.
    pub theta0: [f64; 2],
    /// Direction of the UE at the RIS.
    pub phi0: [f64; 2],
    pub tau0: f64,
    ue_elements: Matrix3xX<f64>,
    a0: CVector,
}

impl SignalModel {
    pub fn new(
        scenario: &Scenario,
        region: &ResolutionRegion,
        d_az: usize,
        d_el: usize,
        mode: ScheduleMode,
    ) -> Result<Self> {
        scenario.validate()?;
        let precoder = build_precoder(scenario, region)?;
        let schedule = build_schedule(scenario, region, d_az, d_el, mode)?;
        Self::with_parts(scenario, region, precoder, schedule)
    }

    pub fn with_parts(
        scenario: &Scenario,
        region: &ResolutionRegion,
        precoder: CVector,
        schedule: RisSchedule,
    ) -> Result<Self> {
        if precoder.len() != scenario.n_ue() {
            return Err(Error::DimensionMismatch {
                expected: scenario.n_ue(),
                got: precoder.len(),
            });
        }
        if schedule.n_profiles() != scenario.n_profiles() {
            return Err(Error::DimensionMismatch {
                expected: scenario.n_profiles(),
                got: schedule.n_profiles(),
            });
        }
        let p = scenario.ue_position();
        let pr = scenario.ris_position();
        let theta0 = angles_of(&scenario.ue_rotation(), &p, &pr)?;
        let phi0 = angles_of(&scenario.ris_rotation(), &pr, &p)?;
        let ue_elements = scenario.ue_element_positions();
        let a0 = array_response(&ue_elements, theta0, scenario.wavelength());
        Ok(Self {
            scenario: scenario.clone(),
            region: region.clone(),
            precoder,
            schedule,
            theta0,
            phi0,
            tau0: 2.0 * (p - pr).norm() / SPEED_OF_LIGHT,
            ue_elements,
            a0,
        })
    }

    /// `T~ * N * N_u`.
    pub fn stream_len(&self) -> usize {
        self.scenario.n_profiles() * self.scenario.n_subcarriers * self.scenario.n_ue()
    }

    pub fn steering(&self, theta: [f64; 2]) -> CVector {
        array_response(&self.ue_elements, theta, self.scenario.wavelength())
    }

    pub fn steering_gradient(&self, theta: [f64; 2]) -> [CVector; 2] {
        array_response_gradient(&self.ue_elements, theta, self.scenario.wavelength())
    }

    pub fn steering_ris_direction(&self) -> &CVector {
        &self.a0
    }

    pub fn delay(&self, tau: f64) -> CVector {
        delay_response(tau, self.scenario.n_subcarriers, self.scenario.delta_f)
    }

    pub fn delay_derivative(&self, tau: f64) -> CVector {
        super::delay_response_derivative(tau, self.scenario.n_subcarriers, self.scenario.delta_f)
    }

    /// `<a_u*(theta), f> = a_u(theta)^T f`.
    pub fn precoder_gain(&self, theta: [f64; 2]) -> Complex64 {
        self.steering(theta)
            .iter()
            .zip(self.precoder.iter())
            .map(|(a, f)| a * f)
            .sum()
    }

    pub fn precoder_gain_gradient(&self, theta: [f64; 2]) -> [Complex64; 2] {
        let g = self.steering_gradient(theta);
        let dot = |v: &CVector| v.iter().zip(self.precoder.iter()).map(|(a, f)| a * f).sum();
        [dot(&g[0]), dot(&g[1])]
    }

    /// Factors of `g^n(tau, theta)`.
    pub fn nonris_factors(&self, eta: [f64; 3]) -> KronAtom {
        let theta = [eta[1], eta[2]];
        KronAtom {
            scale: self.precoder_gain(theta),
            time: CVector::from_element(self.scenario.n_profiles(), Complex64::new(1.0, 0.0)),
            freq: self.delay(eta[0]),
            space: self.steering(theta),
        }
    }

    /// Factors of `g^r(theta, tau_bar, phi)` for `eta = [theta_az, theta_el, tau_bar, phi_az, phi_el]`.
    pub fn ris_factors(&self, eta: [f64; 5]) -> KronAtom {
        KronAtom {
            scale: self.precoder_gain([eta[0], eta[1]]),
            time: self.schedule.response([eta[3], eta[4]]),
            freq: self.delay(eta[2]),
            space: self.a0.clone(),
        }
    }

    pub fn atom_nonris(&self, eta: [f64; 3]) -> CVector {
        self.nonris_factors(eta).materialize()
    }

    pub fn atom_ris(&self, eta: [f64; 5]) -> CVector {
        self.ris_factors(eta).materialize()
    }

    /// Noiseless or noisy observation for the given channel. The raw
    /// per-symbol signal is built from the full channel matrices (direct,
    /// UE-RIS-UE and both double-bounce orders) and then separated.
    pub fn synthesize_with<R: Rng + ?Sized>(
        &self,
        params: &ChannelParams,
        gains: &PathGains,
        noise: Option<&mut R>,
    ) -> Result<SignalBlock> {
        let l = params.targets.len();
        if gains.alpha.len() != l || gains.alpha_bar.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: gains.alpha.len().min(gains.alpha_bar.len()),
            });
        }
        let s = &self.scenario;
        let (t_sym, n_sub, n_u) = (s.n_symbols, s.n_subcarriers, s.n_ue());
        let g0 = self.precoder_gain(self.theta0);
        let nu0 = self.schedule.response(self.phi0);
        let alpha0 = Complex64::new(gains.amp_ue_ris, 0.0);
        struct Path {
            a: CVector,
            gain: Complex64,
            d: CVector,
            d_bar: CVector,
            nu: CVector,
        }
        let paths: Vec<Path> = params
            .targets
            .iter()
            .map(|p| Path {
                a: self.steering(p.theta),
                gain: self.precoder_gain(p.theta),
                d: self.delay(p.tau),
                d_bar: self.delay(p.tau_bar),
                nu: self.schedule.response(p.phi),
            })
            .collect();
        let d0 = self.delay(params.tau0);

        let mut y = CVector::zeros(t_sym * n_sub * n_u);
        for t in 0..t_sym {
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            let tt = t / 2;
            for n in 0..n_sub {
                let base = (t * n_sub + n) * n_u;
                let mut v = CVector::zeros(n_u);
                // UE-RIS-UE
                v.axpy(alpha0 * nu0[tt] * sign * g0 * d0[n], &self.a0, Complex64::new(1.0, 0.0));
                for (k, p) in paths.iter().enumerate() {
                    // UE-SP-UE
                    v.axpy(gains.alpha[k] * p.d[n] * p.gain, &p.a, Complex64::new(1.0, 0.0));
                    let c = gains.alpha_bar[k] * p.nu[tt] * sign * p.d_bar[n];
                    // UE-SP-RIS-UE
                    v.axpy(c * p.gain, &self.a0, Complex64::new(1.0, 0.0));
                    // UE-RIS-SP-UE
                    v.axpy(c * g0, &p.a, Complex64::new(1.0, 0.0));
                }
                y.rows_mut(base, n_u).copy_from(&v);
            }
        }
        if let Some(rng) = noise {
            let sd = (s.noise_var() / 2.0).sqrt();
            for v in y.iter_mut() {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *v += Complex64::new(re * sd, im * sd);
            }
        }
        Ok(SignalBlock::separate(y, s.n_profiles(), n_sub, n_u, s.noise_var() / 2.0))
    }

    /// Seeded synthesis; `noise = false` gives the noiseless observation.
    pub fn synthesize(
        &self,
        params: &ChannelParams,
        gains: &PathGains,
        seed: u64,
        noise: bool,
    ) -> Result<SignalBlock> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if noise {
            self.synthesize_with(params, gains, Some(&mut rng))
        } else {
            self.synthesize_with::<ChaCha8Rng>(params, gains, None)
        }
    }
}

/// Raw and separated observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBlock {
    pub t_tilde: usize,
    pub n_subcarriers: usize,
    pub n_ue: usize,
    pub y_nonris: CVector,
    pub y_ris: CVector,
    /// Raw per-symbol signal, length `2 T~ N N_u`.
    pub y_sys: CVector,
    /// Noise variance of each separated stream (`sigma^2 / 2`).
    pub noise_var: f64,
}

const MAGIC: &[u8; 8] = b"RISSIGv1";

impl SignalBlock {
    /// Half sum and half difference of consecutive symbol pairs.
    pub fn separate(y_sys: CVector, t_tilde: usize, n_sub: usize, n_ue: usize, noise_var: f64) -> Self {
        let block = n_sub * n_ue;
        let mut y_n = CVector::zeros(t_tilde * block);
        let mut y_r = CVector::zeros(t_tilde * block);
        for t in 0..t_tilde {
            for i in 0..block {
                let a = y_sys[2 * t * block + i];
                let b = y_sys[(2 * t + 1) * block + i];
                y_n[t * block + i] = (a + b) * 0.5;
                y_r[t * block + i] = (a - b) * 0.5;
            }
        }
        Self {
            t_tilde,
            n_subcarriers: n_sub,
            n_ue,
            y_nonris: y_n,
            y_ris: y_r,
            y_sys,
            noise_var,
        }
    }

    /// Rebuild the raw signal from the two streams.
    pub fn recombine(&self) -> CVector {
        let block = self.n_subcarriers * self.n_ue;
        let mut y = CVector::zeros(2 * self.t_tilde * block);
        for t in 0..self.t_tilde {
            for i in 0..block {
                let n = self.y_nonris[t * block + i];
                let r = self.y_ris[t * block + i];
                y[2 * t * block + i] = n + r;
                y[(2 * t + 1) * block + i] = n - r;
            }
        }
        y
    }

    /// Little-endian dump: magic, `T~`, `N`, `N_u` as u64, noise variance as
    /// f64, then both streams as interleaved `(re, im)` f64 pairs.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        for d in [self.t_tilde, self.n_subcarriers, self.n_ue] {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        out.write_all(&self.noise_var.to_le_bytes())?;
        for v in self.y_nonris.iter().chain(self.y_ris.iter()) {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`Self::write_binary`]; the raw signal is recombined.
    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config("not a signal dump".into()));
        }
        let mut u = [0u8; 8];
        let mut dims = [0usize; 3];
        for d in dims.iter_mut() {
            input.read_exact(&mut u)?;
            *d = u64::from_le_bytes(u) as usize;
        }
        input.read_exact(&mut u)?;
        let noise_var = f64::from_le_bytes(u);
        let len = dims[0] * dims[1] * dims[2];
        let mut read = |n: usize| -> Result<CVector> {
            let mut v = CVector::zeros(n);
            for x in v.iter_mut() {
                input.read_exact(&mut u)?;
                let re = f64::from_le_bytes(u);
                input.read_exact(&mut u)?;
                *x = Complex64::new(re, f64::from_le_bytes(u));
            }
            Ok(v)
        };
        let y_nonris = read(len)?;
        let y_ris = read(len)?;
        let mut b = Self {
            t_tilde: dims[0],
            n_subcarriers: dims[1],
            n_ue: dims[2],
            y_nonris,
            y_ris,
            y_sys: CVector::zeros(0),
            noise_var,
        };
        b.y_sys = b.recombine();
        Ok(b)
    }

    /// CSV rows `stream,t,n,k,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "stream,t,n,k,re,im")?;
        for (name, y) in [("nonris", &self.y_nonris), ("ris", &self.y_ris)] {
            for t in 0..self.t_tilde {
                for n in 0..self.n_subcarriers {
                    for k in 0..self.n_ue {
                        let v = y[(t * self.n_subcarriers + n) * self.n_ue + k];
                        writeln!(out, "{name},{t},{n},{k},{:.17e},{:.17e}", v.re, v.im)?;
                    }
                }
            }
        }
        Ok(())
    }
}
