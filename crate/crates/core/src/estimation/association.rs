use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::geometry::{invert_nonris, target_params, Scenario};

use super::assignment::assign;
use super::{NonRisDetection, RisDetection};

/// Cost assigned to a pair whose non-RIS detection cannot be mapped to RIS
/// angles.
const UNMAPPABLE_COST: f64 = 1e6;

/// Outcome of matching one non-RIS and/or one RIS detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    Pair { nonris: usize, ris: usize },
    NonRisOnly(usize),
    RisOnly(usize),
}

/// Wrap-aware squared distance between two `(azimuth, elevation)` pairs.
pub fn angle_cost(a: [f64; 2], b: [f64; 2]) -> f64 {
    let daz = (a[0] - b[0]).abs();
    let del = (a[1] - b[1]).abs();
    (daz * daz).min((daz - 2.0 * PI).powi(2)) + (del * del).min((del - PI).powi(2))
}

/// Cost between the RIS angles implied by each non-RIS detection and each
/// RIS detection's angles.
pub fn association_cost(nonris: &[NonRisDetection], ris: &[RisDetection], scenario: &Scenario) -> DMatrix<f64> {
    let implied: Vec<Option<[f64; 2]>> = nonris
        .iter()
        .map(|d| {
            invert_nonris(d.eta, scenario)
                .and_then(|c| target_params(scenario, &c))
                .map(|p| p.phi)
                .ok()
        })
        .collect();
    DMatrix::from_fn(nonris.len(), ris.len(), |i, k| match implied[i] {
        Some(phi) => angle_cost(phi, [ris[k].eta[3], ris[k].eta[4]]),
        None => UNMAPPABLE_COST,
    })
}

/// Minimum-cost matching; leftovers become singletons. Pairs come first in
/// non-RIS order, then unmatched non-RIS, then unmatched RIS detections.
pub fn associate(nonris: &[NonRisDetection], ris: &[RisDetection], scenario: &Scenario) -> Vec<Association> {
    let cost = association_cost(nonris, ris, scenario);
    let (matched, _) = assign(&cost);
    let mut out = Vec::with_capacity(nonris.len().max(ris.len()));
    let mut ris_used = vec![false; ris.len()];
    for (i, m) in matched.iter().enumerate() {
        if let Some(k) = *m {
            if cost[(i, k)] < UNMAPPABLE_COST {
                ris_used[k] = true;
                out.push(Association::Pair { nonris: i, ris: k });
            }
        }
    }
    for (i, m) in matched.iter().enumerate() {
        let paired = m.is_some_and(|k| cost[(i, k)] < UNMAPPABLE_COST);
        if !paired {
            out.push(Association::NonRisOnly(i));
        }
    }
    for (k, used) in ris_used.iter().enumerate() {
        if !used {
            out.push(Association::RisOnly(k));
        }
    }
    out
}
