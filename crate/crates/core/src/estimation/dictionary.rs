use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::signal::{KronAtom, SignalModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictionaryKind {
    NonRis,
    Ris,
}

/// Grid density of a dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DictionaryConfig {
    /// Grid points per nominal resolution bin.
    pub oversampling: f64,
    /// Lower bound on points per dimension.
    pub min_points: usize,
    /// Upper bound on points per dimension.
    pub max_points: usize,
    /// Match with unit-norm atoms (`|<g_i, r>| / ||g_i||`) instead of `|<g_i, r>|`.
    pub normalized: bool,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self {
            oversampling: 4.0,
            min_points: 9,
            max_points: 81,
            normalized: true,
        }
    }
}

fn grid(iv: [f64; 2], bin: f64, cfg: &DictionaryConfig) -> Vec<f64> {
    let span = iv[1] - iv[0];
    let min = cfg.min_points.max(2);
    let step = (bin / cfg.oversampling).min(span / (min - 1) as f64);
    let n = ((span / step).ceil() as usize + 1).clamp(min, cfg.max_points.max(min));
    (0..n).map(|i| iv[0] + span * i as f64 / (n - 1) as f64).collect()
}

/// Dictionary of non-RIS or RIS atoms on a `delay x azimuth x elevation`
/// grid, stored in factored form.
///
/// Atom `i = (ia * n_el + ie) * n_delay + id`. For the RIS kind the angles
/// are RIS angles `phi` and the UE angles are fixed at `theta_ris`.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub kind: DictionaryKind,
    pub delays: Vec<f64>,
    pub az: Vec<f64>,
    pub el: Vec<f64>,
    pub theta_ris: [f64; 2],
    pub normalized: bool,
    t_tilde: usize,
    n_sub: usize,
    n_ue: usize,
    freq: Vec<CVector>,
    /// Per angle pair: spatial factor (non-RIS) or time factor (RIS).
    angle: Vec<CVector>,
    scale: Vec<Complex64>,
    /// Per angle pair `||g||`.
    norms: Vec<f64>,
    /// Fixed spatial factor of RIS atoms.
    space_ris: CVector,
}

impl Dictionary {
    /// Grid over the model's resolution region.
    pub fn for_region(model: &SignalModel, kind: DictionaryKind, cfg: &DictionaryConfig) -> Result<Self> {
        let s = &model.scenario;
        let r = &model.region;
        let delay_bin = 1.0 / s.bandwidth();
        let (delays, az, el) = match kind {
            DictionaryKind::NonRis => (
                grid(r.delay_interval, delay_bin, cfg),
                grid(r.az_interval, 2.0 / s.ue_array.0 as f64, cfg),
                grid(r.el_interval, 2.0 / s.ue_array.1 as f64, cfg),
            ),
            DictionaryKind::Ris => {
                let sched = &model.schedule;
                let span = |iv: [f64; 2]| iv[1] - iv[0];
                (
                    grid(r.ris_delay_interval, delay_bin, cfg),
                    grid(r.ris_az_interval, span(r.ris_az_interval) / sched.d_az as f64, cfg),
                    grid(r.ris_el_interval, span(r.ris_el_interval) / sched.d_el as f64, cfg),
                )
            }
        };
        Self::with_grid(model, kind, delays, az, el, cfg.normalized)
    }

    /// Region grid with the nearest grid line of every axis moved onto each
    /// of `points` (`(delay, az, el)` in the dictionary's coordinates), so
    /// that the points are atoms.
    pub fn for_region_through(
        model: &SignalModel,
        kind: DictionaryKind,
        cfg: &DictionaryConfig,
        points: &[[f64; 3]],
    ) -> Result<Self> {
        let base = Self::for_region(model, kind, cfg)?;
        let mut axes = [base.delays, base.az, base.el];
        for (k, axis) in axes.iter_mut().enumerate() {
            let mut taken = vec![false; axis.len()];
            for p in points {
                if let Some(i) = axis.iter().position(|&v| v == p[k]) {
                    taken[i] = true;
                    continue;
                }
                let free = (0..axis.len()).filter(|&i| !taken[i]);
                let Some(i) = free.min_by(|&a, &b| (axis[a] - p[k]).abs().total_cmp(&(axis[b] - p[k]).abs())) else {
                    return Err(Error::InvalidParameter("more points than grid lines".into()));
                };
                axis[i] = p[k];
                taken[i] = true;
            }
            axis.sort_by(f64::total_cmp);
        }
        let [delays, az, el] = axes;
        Self::with_grid(model, kind, delays, az, el, cfg.normalized)
    }

    /// Dictionary on explicit grids.
    pub fn with_grid(
        model: &SignalModel,
        kind: DictionaryKind,
        delays: Vec<f64>,
        az: Vec<f64>,
        el: Vec<f64>,
        normalized: bool,
    ) -> Result<Self> {
        if delays.is_empty() || az.is_empty() || el.is_empty() {
            return Err(Error::InvalidParameter("dictionary grid must be non-empty".into()));
        }
        let s = &model.scenario;
        let theta_ris = {
            let c = model.region.center();
            [c[1], c[2]]
        };
        let freq: Vec<CVector> = delays.iter().map(|&t| model.delay(t)).collect();
        let mut angle = Vec::with_capacity(az.len() * el.len());
        let mut scale = Vec::with_capacity(az.len() * el.len());
        let mut norms = Vec::with_capacity(az.len() * el.len());
        let n_sub = s.n_subcarriers;
        let t_tilde = s.n_profiles();
        let n_ue = s.n_ue();
        for &a in &az {
            for &e in &el {
                let (v, p) = match kind {
                    DictionaryKind::NonRis => (model.steering([a, e]), model.precoder_gain([a, e])),
                    DictionaryKind::Ris => (model.schedule.response([a, e]), model.precoder_gain(theta_ris)),
                };
                let other = match kind {
                    DictionaryKind::NonRis => t_tilde as f64,
                    DictionaryKind::Ris => n_ue as f64,
                };
                norms.push((p.norm_sqr() * v.norm_squared() * n_sub as f64 * other).sqrt());
                angle.push(v);
                scale.push(p);
            }
        }
        Ok(Self {
            kind,
            delays,
            az,
            el,
            theta_ris,
            normalized,
            t_tilde,
            n_sub,
            n_ue,
            freq,
            angle,
            scale,
            norms,
            space_ris: model.steering_ris_direction().clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.delays.len() * self.az.len() * self.el.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn split(&self, i: usize) -> (usize, usize) {
        (i / self.delays.len(), i % self.delays.len())
    }

    /// Grid index of `(delay, az, el)` indices.
    pub fn index(&self, id: usize, ia: usize, ie: usize) -> usize {
        (ia * self.el.len() + ie) * self.delays.len() + id
    }

    /// `(delay, az, el)` of atom `i`.
    pub fn grid_point(&self, i: usize) -> [f64; 3] {
        let (ang, id) = self.split(i);
        [self.delays[id], self.az[ang / self.el.len()], self.el[ang % self.el.len()]]
    }

    /// Channel parameters of atom `i`: `(tau, theta_az, theta_el)` for the
    /// non-RIS kind, `(theta_az, theta_el, tau_bar, phi_az, phi_el)` for RIS.
    pub fn params(&self, i: usize) -> Vec<f64> {
        let p = self.grid_point(i);
        match self.kind {
            DictionaryKind::NonRis => p.to_vec(),
            DictionaryKind::Ris => vec![self.theta_ris[0], self.theta_ris[1], p[0], p[1], p[2]],
        }
    }

    pub fn factors(&self, i: usize) -> KronAtom {
        let (ang, id) = self.split(i);
        let ones = CVector::from_element(self.t_tilde, Complex64::new(1.0, 0.0));
        match self.kind {
            DictionaryKind::NonRis => KronAtom {
                scale: self.scale[ang],
                time: ones,
                freq: self.freq[id].clone(),
                space: self.angle[ang].clone(),
            },
            DictionaryKind::Ris => KronAtom {
                scale: self.scale[ang],
                time: self.angle[ang].clone(),
                freq: self.freq[id].clone(),
                space: self.space_ris.clone(),
            },
        }
    }

    pub fn atom(&self, i: usize) -> CVector {
        self.factors(i).materialize()
    }

    pub fn atom_norm(&self, i: usize) -> f64 {
        self.norms[self.split(i).0]
    }

    /// `<g_i, r>` for every atom.
    pub fn correlate(&self, r: &CVector) -> Result<Vec<Complex64>> {
        let (tt, n, nu) = (self.t_tilde, self.n_sub, self.n_ue);
        if r.len() != tt * n * nu {
            return Err(Error::DimensionMismatch {
                expected: tt * n * nu,
                got: r.len(),
            });
        }
        let nd = self.delays.len();
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        // Reduce the residual to an N-vector per angle pair, then correlate with delays.
        let mut reduced = vec![Complex64::new(0.0, 0.0); n];
        match self.kind {
            DictionaryKind::NonRis => {
                // s[n, k] = sum_t r[t, n, k]
                let mut s = vec![Complex64::new(0.0, 0.0); n * nu];
                for t in 0..tt {
                    for (j, v) in s.iter_mut().enumerate() {
                        *v += r[t * n * nu + j];
                    }
                }
                for (ang, a) in self.angle.iter().enumerate() {
                    for (ni, red) in reduced.iter_mut().enumerate() {
                        *red = (0..nu).map(|k| a[k].conj() * s[ni * nu + k]).sum();
                    }
                    self.finish(ang, nd, &reduced, &mut out);
                }
            }
            DictionaryKind::Ris => {
                // q[t, n] = sum_k conj(a0_k) r[t, n, k]
                let q: Vec<Complex64> = (0..tt * n)
                    .map(|tn| (0..nu).map(|k| self.space_ris[k].conj() * r[tn * nu + k]).sum())
                    .collect();
                for (ang, nu_vec) in self.angle.iter().enumerate() {
                    reduced.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                    for t in 0..tt {
                        let w = nu_vec[t].conj();
                        for (ni, red) in reduced.iter_mut().enumerate() {
                            *red += w * q[t * n + ni];
                        }
                    }
                    self.finish(ang, nd, &reduced, &mut out);
                }
            }
        }
        Ok(out)
    }

    fn finish(&self, ang: usize, nd: usize, reduced: &[Complex64], out: &mut [Complex64]) {
        let p = self.scale[ang].conj();
        for (id, d) in self.freq.iter().enumerate() {
            let v: Complex64 = d.iter().zip(reduced).map(|(x, y)| x.conj() * y).sum();
            out[ang * nd + id] = p * v;
        }
    }

    /// Matching objective per atom: `|<g_i, r>|`, divided by `||g_i||` when
    /// the dictionary is normalized. Zero-norm atoms score zero.
    pub fn objective(&self, r: &CVector) -> Result<Vec<f64>> {
        let c = self.correlate(r)?;
        Ok(c
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if !self.normalized {
                    v.norm()
                } else {
                    let nrm = self.atom_norm(i);
                    if nrm > 0.0 {
                        v.norm() / nrm
                    } else {
                        0.0
                    }
                }
            })
            .collect())
    }
}
