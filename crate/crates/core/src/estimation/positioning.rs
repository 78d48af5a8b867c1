use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{efim_nonris, efim_ris};
use crate::geometry::{invert_nonris, invert_ris, jacobian_position, target_params, Scenario};
use crate::linalg::{invert_spd, wrap_pi, PsdInverse};
use crate::signal::SignalModel;

use super::association::Association;
use super::{NonRisDetection, RisDetection};

/// Rows of `h(c) = (tau, theta_az, theta_el, tau_bar, phi_az, phi_el)`
/// holding azimuths.
const AZIMUTH_ROWS: [usize; 2] = [1, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Plug-in EFIM of the detections.
    Efim,
    /// Diagonal with the inverse squared nominal resolution of each parameter.
    Nominal,
    Identity,
}

/// Where the weight of a position estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    /// Block of the joint EFIM of all detections of the stream.
    JointEfim,
    /// EFIM of the detection alone (the joint one was rank deficient).
    SingleEfim,
    Nominal,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlsConfig {
    pub max_iter: usize,
    /// Convergence threshold on the accepted step (m).
    pub step_tol: f64,
}

impl Default for NlsConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            step_tol: 1e-9,
        }
    }
}

/// Observed subset of `h(c)` with its weight.
#[derive(Debug, Clone)]
pub struct Measurement {
    /// Indices into `h(c)`.
    pub rows: Vec<usize>,
    pub values: Vec<f64>,
    pub weight: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct NlsResult {
    pub position: Vector3<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `r^T W r / 2` at the start and after every accepted step.
    pub cost_trace: Vec<f64>,
    /// `(J^T W J)^-1` at the solution, when invertible.
    pub covariance: Option<Matrix3<f64>>,
}

fn residual(scenario: &Scenario, m: &Measurement, c: &Vector3<f64>) -> Result<DVector<f64>> {
    let h = target_params(scenario, c)?.as_array();
    Ok(DVector::from_iterator(
        m.rows.len(),
        m.rows.iter().zip(&m.values).map(|(&i, &v)| {
            let d = h[i] - v;
            if AZIMUTH_ROWS.contains(&i) {
                wrap_pi(d)
            } else {
                d
            }
        }),
    ))
}

fn jacobian_rows(scenario: &Scenario, m: &Measurement, c: &Vector3<f64>) -> Result<DMatrix<f64>> {
    let j = jacobian_position(c, scenario)?;
    Ok(DMatrix::from_fn(m.rows.len(), 3, |r, k| j[(m.rows[r], k)]))
}

fn cost(r: &DVector<f64>, w: &DMatrix<f64>) -> f64 {
    0.5 * (r.transpose() * w * r)[(0, 0)]
}

/// Weighted least squares fit of a position to `m` by Levenberg-Marquardt.
pub fn solve_position(
    scenario: &Scenario,
    m: &Measurement,
    init: Vector3<f64>,
    cfg: &NlsConfig,
) -> Result<NlsResult> {
    let k = m.rows.len();
    if m.values.len() != k || m.weight.shape() != (k, k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: m.values.len(),
        });
    }
    let w = &m.weight;
    let mut c = init;
    let mut r = residual(scenario, m, &c)?;
    let mut f = cost(&r, w);
    let mut trace = vec![f];
    let mut lambda = 1e-3;
    let mut converged = f == 0.0;
    let mut iterations = 0;
    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        let Ok(j) = jacobian_rows(scenario, m, &c) else { break };
        let h = j.transpose() * w * &j;
        let g = j.transpose() * w * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = h.clone();
            for i in 0..3 {
                a[(i, i)] += lambda * h[(i, i)].max(1e-300);
            }
            let Some(delta) = a.cholesky().map(|ch| -ch.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let step = Vector3::new(delta[0], delta[1], delta[2]);
            if step.norm() < cfg.step_tol {
                converged = true;
                break;
            }
            let trial = c + step;
            if let Ok(rt) = residual(scenario, m, &trial) {
                let ft = cost(&rt, w);
                if ft <= f {
                    c = trial;
                    r = rt;
                    f = ft;
                    trace.push(f);
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted || f == 0.0 {
            converged = converged || f == 0.0;
            break;
        }
    }
    let covariance = jacobian_rows(scenario, m, &c).ok().and_then(|j| {
        let h = j.transpose() * w * &j;
        Matrix3::from_iterator(h.iter().cloned()).try_inverse()
    });
    Ok(NlsResult {
        position: c,
        converged,
        iterations,
        cost_trace: trace,
        covariance,
    })
}

/// Position estimate of one associated detection set.
#[derive(Debug, Clone)]
pub struct PositionEstimate {
    pub association: Association,
    pub position: Vector3<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub weight_source: WeightSource,
    pub covariance: Option<Matrix3<f64>>,
}

/// Nominal resolution of `h(c)` entries.
fn nominal_bins(model: &SignalModel) -> [f64; 6] {
    let s = &model.scenario;
    let tb = 1.0 / s.bandwidth();
    [
        tb,
        2.0 / s.ue_array.0 as f64,
        2.0 / s.ue_array.1 as f64,
        tb,
        2.0 / s.ris_array.0 as f64,
        2.0 / s.ris_array.1 as f64,
    ]
}

fn diagonal(values: impl Iterator<Item = f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(3, values))
}

/// 3x3 information blocks for every detection of one stream.
fn stream_weights(
    weighting: Weighting,
    bins: [f64; 3],
    joint: impl FnOnce() -> DMatrix<f64>,
    single: impl Fn(usize) -> DMatrix<f64>,
    l: usize,
) -> Vec<(DMatrix<f64>, WeightSource)> {
    let nominal = || diagonal(bins.iter().map(|b| 1.0 / (b * b)));
    match weighting {
        Weighting::Identity => vec![(DMatrix::identity(3, 3), WeightSource::Identity); l],
        Weighting::Nominal => vec![(nominal(), WeightSource::Nominal); l],
        Weighting::Efim => {
            if l == 0 {
                return Vec::new();
            }
            let pinv = PsdInverse::new(&joint());
            (0..l)
                .map(|i| {
                    let idx = [i, l + i, 2 * l + i];
                    if idx.iter().all(|&k| pinv.identifiable(k)) {
                        let cov = DMatrix::from_fn(3, 3, |a, b| pinv.inverse[(idx[a], idx[b])]);
                        if let Some(w) = invert_spd(&cov) {
                            return (w, WeightSource::JointEfim);
                        }
                    }
                    let f = single(i);
                    let p = PsdInverse::new(&f);
                    if !p.rank_deficient && f.iter().all(|v| v.is_finite()) {
                        (f, WeightSource::SingleEfim)
                    } else {
                        (nominal(), WeightSource::Nominal)
                    }
                })
                .collect()
        }
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

fn worse(a: WeightSource, b: WeightSource) -> WeightSource {
    let rank = |s| match s {
        WeightSource::JointEfim => 0,
        WeightSource::SingleEfim => 1,
        WeightSource::Nominal => 2,
        WeightSource::Identity => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

/// Position estimates of associated detections.
///
/// Pairs start at the non-RIS closed-form inverse and fit all six
/// parameters. Non-RIS singletons fit `(tau, theta)` and RIS singletons fit
/// `(tau_bar, phi)` starting from the corresponding closed-form inverse.
pub fn localize(
    model: &SignalModel,
    nonris: &[NonRisDetection],
    ris: &[RisDetection],
    associations: &[Association],
    weighting: Weighting,
    cfg: &NlsConfig,
) -> Vec<PositionEstimate> {
    let s = &model.scenario;
    let sigma2 = s.noise_var();
    let bins = nominal_bins(model);
    let wn = stream_weights(
        weighting,
        [bins[0], bins[1], bins[2]],
        || {
            let etas: Vec<[f64; 3]> = nonris.iter().map(|d| d.eta).collect();
            let g: Vec<Complex64> = nonris.iter().map(|d| d.gain).collect();
            efim_nonris(model, &etas, &g, sigma2)
        },
        |i| efim_nonris(model, &[nonris[i].eta], &[nonris[i].gain], sigma2),
        nonris.len(),
    );
    let wr = stream_weights(
        weighting,
        [bins[3], bins[4], bins[5]],
        || {
            let etas: Vec<[f64; 5]> = ris.iter().map(|d| d.eta).collect();
            let g: Vec<Complex64> = ris.iter().map(|d| d.gain).collect();
            efim_ris(model, &etas, &g, sigma2)
        },
        |k| efim_ris(model, &[ris[k].eta], &[ris[k].gain], sigma2),
        ris.len(),
    );
    let fallback = model.region.center_position(s).unwrap_or_else(|_| s.ue_position());
    associations
        .iter()
        .map(|&a| {
            let (m, init, source) = match a {
                Association::Pair { nonris: i, ris: k } => {
                    let e = nonris[i].eta;
                    let r = ris[k].eta;
                    (
                        Measurement {
                            rows: (0..6).collect(),
                            values: vec![e[0], e[1], e[2], r[2], r[3], r[4]],
                            weight: block_diag(&wn[i].0, &wr[k].0),
                        },
                        invert_nonris(e, s).or_else(|_| invert_ris(r[2], [r[3], r[4]], s)),
                        worse(wn[i].1, wr[k].1),
                    )
                }
                Association::NonRisOnly(i) => {
                    let e = nonris[i].eta;
                    (
                        Measurement {
                            rows: vec![0, 1, 2],
                            values: e.to_vec(),
                            weight: wn[i].0.clone(),
                        },
                        invert_nonris(e, s),
                        wn[i].1,
                    )
                }
                Association::RisOnly(k) => {
                    let r = ris[k].eta;
                    (
                        Measurement {
                            rows: vec![3, 4, 5],
                            values: vec![r[2], r[3], r[4]],
                            weight: wr[k].0.clone(),
                        },
                        invert_ris(r[2], [r[3], r[4]], s),
                        wr[k].1,
                    )
                }
            };
            let init = init.unwrap_or(fallback);
            match solve_position(s, &m, init, cfg) {
                Ok(res) => PositionEstimate {
                    association: a,
                    position: res.position,
                    converged: res.converged,
                    iterations: res.iterations,
                    weight_source: source,
                    covariance: res.covariance,
                },
                Err(_) => PositionEstimate {
                    association: a,
                    position: init,
                    converged: false,
                    iterations: 0,
                    weight_source: source,
                    covariance: None,
                },
            }
        })
        .collect()
}
