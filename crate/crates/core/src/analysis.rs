//! End-to-end p-leader estimation on a coefficient pyramid.

use serde::{Deserialize, Serialize};

use crate::dwt::{CoefficientPyramid, MIN_VALID_COARSEST};
use crate::error::{Error, Result};
use crate::formalism::{
    check_bound, default_q_grid, estimate_from_samples, leader_samples, regression_weights,
    BoundReport, EstimationRequest, LegendreSpectrum, ScalingEstimates, Source, Weighting,
};
use crate::leaders::{coefficient_weights, compute_p_leaders, eta_hat_weighted, LeaderPyramid, Neighborhood};
use crate::stats::PValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeaderConfig {
    pub q_grid: Vec<f64>,
    pub j1: usize,
    /// Coarsest regression octave; `None` picks the coarsest octave with
    /// enough valid leaders.
    pub j2: Option<usize>,
    pub weighting: Weighting,
    pub corrected: bool,
    pub neighborhood: Neighborhood,
    pub m_max: usize,
    pub bound_tolerance: f64,
}

impl Default for LeaderConfig {
    fn default() -> Self {
        LeaderConfig {
            q_grid: default_q_grid(),
            j1: 4,
            j2: None,
            weighting: Weighting::Counts,
            corrected: true,
            neighborhood: Neighborhood::Full,
            m_max: 4,
            bound_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderAnalysis {
    pub estimates: ScalingEstimates,
    pub spectrum: LegendreSpectrum,
    /// Bound check, finite p only.
    pub bound: Option<BoundReport>,
}

/// Regression range for a leader pyramid under `config`.
pub fn leader_range(leaders: &LeaderPyramid, config: &LeaderConfig) -> Result<(usize, usize)> {
    let coarsest = leaders.coarsest_with(MIN_VALID_COARSEST).ok_or_else(|| {
        Error::InsufficientScales(format!(
            "no octave keeps {MIN_VALID_COARSEST} valid leaders"
        ))
    })?;
    let j2 = config.j2.unwrap_or(coarsest);
    if j2 > leaders.num_octaves() {
        return Err(Error::InsufficientScales(format!(
            "j2 = {j2} exceeds the {} available octaves",
            leaders.num_octaves()
        )));
    }
    if config.j1 < 1 || j2 < config.j1 + 2 {
        return Err(Error::InsufficientScales(format!(
            "regression range {}..={j2} has fewer than 3 octaves",
            config.j1
        )));
    }
    Ok((config.j1, j2))
}

/// Leaders, `η̂(p)`, corrected estimates and spectrum for one `p`.
///
/// If the correction is requested but `η̂(p) <= 0` (p beyond the critical
/// index) the uncorrected estimator is used and `correction_applied` is false.
pub fn analyze_leaders(
    pyramid: &CoefficientPyramid,
    p: PValue,
    config: &LeaderConfig,
) -> Result<LeaderAnalysis> {
    let leaders = compute_p_leaders(pyramid, p, config.neighborhood)?;
    analyze_leader_pyramid(pyramid, &leaders, config)
}

pub fn analyze_leader_pyramid(
    pyramid: &CoefficientPyramid,
    leaders: &LeaderPyramid,
    config: &LeaderConfig,
) -> Result<LeaderAnalysis> {
    let p = leaders.p;
    let (j1, j2) = leader_range(leaders, config)?;
    let counts = leaders.valid_counts();
    let b: Vec<f64> = (j1..=j2)
        .map(|j| match config.weighting {
            Weighting::Counts => counts[j - 1] as f64,
            Weighting::Uniform => 1.0,
        })
        .collect();
    let weights = regression_weights(j1, j2, &b)?;
    let eta = match p {
        PValue::Finite(pv) => {
            let cw = coefficient_weights(pyramid, j1, j2, config.weighting)?;
            Some(eta_hat_weighted(pyramid, pv, &cw)?)
        }
        PValue::Infinite => None,
    };
    let correction = match eta {
        Some(e) if config.corrected && e > 0.0 => Some(e),
        _ => None,
    };
    let samples = leader_samples(leaders, Some((j1, j2)))?;
    let req = EstimationRequest {
        q_grid: &config.q_grid,
        m_max: config.m_max,
        p,
        correction,
        weights: &weights,
        d: pyramid.dim.d(),
        source: Source::Leader,
    };
    let (mut estimates, spectrum) = estimate_from_samples(&samples, &req)?;
    estimates.eta_p = eta;
    let bound = p
        .finite()
        .map(|pv| check_bound(&spectrum, pv, config.bound_tolerance));
    Ok(LeaderAnalysis {
        estimates,
        spectrum,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwt::{daubechies_filter, dwt1d};

    #[test]
    fn fallback_when_eta_is_not_positive() {
        // alternating spikes: coefficients do not decay, η(p) <= 0 for large p
        let x: Vec<f64> = (0..4096).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * ((i % 97) as f64 + 1.0)).collect();
        let pyr = dwt1d(&x, &daubechies_filter(2).unwrap(), None).unwrap();
        let cfg = LeaderConfig {
            j1: 1,
            ..LeaderConfig::default()
        };
        let out = analyze_leaders(&pyr, PValue::Finite(8.0), &cfg).unwrap();
        let eta = out.estimates.eta_p.unwrap();
        assert_eq!(out.estimates.correction_applied, eta > 0.0);
        let inf = analyze_leaders(&pyr, PValue::Infinite, &cfg).unwrap();
        assert!(!inf.estimates.correction_applied && inf.bound.is_none());
    }

    #[test]
    fn range_errors() {
        let x: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).sin()).collect();
        let pyr = dwt1d(&x, &daubechies_filter(2).unwrap(), None).unwrap();
        let cfg = LeaderConfig {
            j1: 4,
            ..LeaderConfig::default()
        };
        assert!(matches!(
            analyze_leaders(&pyr, PValue::Finite(2.0), &cfg),
            Err(Error::InsufficientScales(_))
        ));
    }
}
