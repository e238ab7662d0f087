//! Structure functions, log-cumulants and Legendre spectra of multiresolution
//! quantities, with the finite-resolution correction for p-leaders.
//!
//! Truncating the p-leader sum at the finest octave multiplies every leader at
//! octave `j` by `((1 - 2^{-j η(p)}) / (1 - 2^{-η(p)}))^{1/p}`. The corrected
//! estimators remove that factor before regressing, using an estimate of
//! `η(p)`. For `p = ∞` the factor is 1 and no correction applies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leaders::LeaderPyramid;
use crate::stats::{cumulants4, log2_mean_pow, PValue};

/// Confidence weights `b_j` for the scale regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// `b_j = n_j`, the number of samples at the scale.
    #[default]
    Counts,
    /// `b_j = 1`.
    Uniform,
}

/// Linear weights turning per-scale values into a weighted least-squares slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionWeights {
    pub j1: usize,
    pub j2: usize,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
}

impl RegressionWeights {
    /// `Σ_j w_j y_j` for values indexed `j1..=j2`.
    pub fn slope(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.w.len());
        self.w.iter().zip(values).map(|(w, y)| w * y).sum()
    }

    pub fn octaves(&self) -> std::ops::RangeInclusive<usize> {
        self.j1..=self.j2
    }
}

/// `w_j = b_j (S0 j - S1) / (S0 S2 - S1²)` with `S_i = Σ b_j j^i`.
pub fn regression_weights(j1: usize, j2: usize, confidence: &[f64]) -> Result<RegressionWeights> {
    if j2 < j1 + 2 {
        return Err(Error::InsufficientScales(format!(
            "regression range {j1}..={j2} has fewer than 3 octaves"
        )));
    }
    if confidence.len() != j2 - j1 + 1 {
        return Err(Error::InvalidParameter(format!(
            "{} confidence weights for {} octaves",
            confidence.len(),
            j2 - j1 + 1
        )));
    }
    if confidence.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidParameter("confidence weights must be positive".into()));
    }
    let max_b = confidence.iter().cloned().fold(0.0f64, f64::max);
    let b: Vec<f64> = confidence.iter().map(|&b| b / max_b).collect();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (i, &bj) in b.iter().enumerate() {
        let j = (j1 + i) as f64;
        s0 += bj;
        s1 += bj * j;
        s2 += bj * j * j;
    }
    let den = s0 * s2 - s1 * s1;
    if !(den > 1e-12 * s0 * s2) {
        return Err(Error::SingularRegression(format!(
            "confidence weights on {j1}..={j2} concentrate on a single octave"
        )));
    }
    let w = b
        .iter()
        .enumerate()
        .map(|(i, &bj)| bj * (s0 * (j1 + i) as f64 - s1) / den)
        .collect();
    Ok(RegressionWeights {
        j1,
        j2,
        b: confidence.to_vec(),
        w,
    })
}

/// Origin of a multiresolution quantity table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Leader,
    Coefficient,
    Mfdfa,
}

/// Valid non-negative multiresolution quantities at one scale index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSamples {
    pub j: usize,
    pub values: Vec<f64>,
}

/// Valid leaders per octave over `range`, or all octaves with at least one valid leader.
pub fn leader_samples(
    leaders: &LeaderPyramid,
    range: Option<(usize, usize)>,
) -> Result<Vec<ScaleSamples>> {
    let (lo, hi) = match range {
        Some((a, b)) => {
            if a < 1 || b > leaders.num_octaves() || a > b {
                return Err(Error::InsufficientScales(format!(
                    "octave range {a}..={b} outside 1..={}",
                    leaders.num_octaves()
                )));
            }
            (a, b)
        }
        None => (
            1,
            leaders.coarsest_with(1).ok_or_else(|| {
                Error::InsufficientData("leader pyramid has no valid leader".into())
            })?,
        ),
    };
    (lo..=hi)
        .map(|j| {
            let values = leaders.octave(j).valid_values();
            if values.is_empty() {
                Err(Error::InsufficientData(format!("no valid leader at octave {j}")))
            } else {
                Ok(ScaleSamples { j, values })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFunctionTable {
    pub q_grid: Vec<f64>,
    pub octaves: Vec<usize>,
    /// `log2_s[i][k]`: octave `octaves[i]`, moment `q_grid[k]`.
    pub log2_s: Vec<Vec<f64>>,
    pub n: Vec<usize>,
    pub source: Source,
}

impl StructureFunctionTable {
    fn row(&self, j: usize) -> Result<&[f64]> {
        self.octaves
            .iter()
            .position(|&o| o == j)
            .map(|i| self.log2_s[i].as_slice())
            .ok_or_else(|| Error::InsufficientScales(format!("octave {j} missing from table")))
    }
}

/// `log2` of per-octave leader moments `(1/n_j) Σ_k ℓ(j,k)^q` over all octaves.
pub fn structure_functions(
    leaders: &LeaderPyramid,
    q_grid: &[f64],
) -> Result<StructureFunctionTable> {
    structure_functions_from(&leader_samples(leaders, None)?, q_grid, Source::Leader)
}

pub fn structure_functions_from(
    samples: &[ScaleSamples],
    q_grid: &[f64],
    source: Source,
) -> Result<StructureFunctionTable> {
    let mut log2_s = Vec::with_capacity(samples.len());
    for s in samples {
        let row = q_grid
            .iter()
            .map(|&q| {
                log2_mean_pow(&s.values, q).ok_or_else(|| Error::DegenerateData {
                    octave: s.j,
                    reason: format!("zero multiresolution quantity raised to q = {q}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        log2_s.push(row);
    }
    Ok(StructureFunctionTable {
        q_grid: q_grid.to_vec(),
        octaves: samples.iter().map(|s| s.j).collect(),
        log2_s,
        n: samples.iter().map(|s| s.values.len()).collect(),
        source,
    })
}

/// `log2(1 - 2^{-j η})`, the scale-dependent part of the truncation factor.
pub fn truncation_log2(j: usize, eta: f64) -> f64 {
    (-(2f64.powf(-(j as f64) * eta))).ln_1p() / std::f64::consts::LN_2
}

/// Validated `(1/p, η)` pair when a correction is to be applied.
fn correction_params(p: PValue, eta_p: f64, corrected: bool) -> Result<Option<(f64, f64)>> {
    match (corrected, p) {
        (false, _) | (true, PValue::Infinite) => Ok(None),
        (true, PValue::Finite(pv)) => {
            if !(eta_p > 0.0) {
                return Err(Error::InvalidCorrection(eta_p));
            }
            Ok(Some((1.0 / pv, eta_p)))
        }
    }
}

/// Scaling function estimate on the table's q grid:
/// `ζ̂(q) = Σ_j w_j (log2 S(j,q) - (q/p) log2(1 - 2^{-j η(p)}))` when corrected.
pub fn zeta_hat(
    table: &StructureFunctionTable,
    p: PValue,
    eta_p: f64,
    weights: &RegressionWeights,
    corrected: bool,
) -> Result<Vec<f64>> {
    let corr = correction_params(p, eta_p, corrected)?;
    let rows = weights
        .octaves()
        .map(|j| table.row(j))
        .collect::<Result<Vec<_>>>()?;
    Ok(table
        .q_grid
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let vals: Vec<f64> = weights
                .octaves()
                .zip(&rows)
                .map(|(j, row)| match corr {
                    Some((inv_p, eta)) => row[k] - q * inv_p * truncation_log2(j, eta),
                    None => row[k],
                })
                .collect();
            weights.slope(&vals)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantTable {
    pub octaves: Vec<usize>,
    /// `c[i][m-1]`: cumulant of order `m` of `ln ℓ` at octave `octaves[i]`.
    pub c: Vec<[f64; 4]>,
    pub n: Vec<usize>,
    pub m_max: usize,
}

/// Sample cumulants of `ln ℓ(j,·)` for every octave with valid leaders.
pub fn cumulants(leaders: &LeaderPyramid, m_max: usize) -> Result<CumulantTable> {
    cumulants_from(&leader_samples(leaders, None)?, m_max)
}

pub fn cumulants_from(samples: &[ScaleSamples], m_max: usize) -> Result<CumulantTable> {
    if !(1..=4).contains(&m_max) {
        return Err(Error::InvalidParameter(format!("m_max {m_max} outside 1..=4")));
    }
    let mut c = Vec::with_capacity(samples.len());
    for s in samples {
        if s.values.iter().any(|&v| v <= 0.0) {
            return Err(Error::DegenerateData {
                octave: s.j,
                reason: "zero multiresolution quantity has no logarithm".into(),
            });
        }
        let logs: Vec<f64> = s.values.iter().map(|v| v.ln()).collect();
        c.push(cumulants4(&logs));
    }
    Ok(CumulantTable {
        octaves: samples.iter().map(|s| s.j).collect(),
        c,
        n: samples.iter().map(|s| s.values.len()).collect(),
        m_max,
    })
}

/// Log-cumulant estimates `ĉ_1..ĉ_{m_max}`.
///
/// `ĉ_1 = (1/ln 2) Σ_j w_j (C_1(j) - (1/p) ln((1 - 2^{-jη})/(1 - 2^{-η})))`
/// when corrected; higher orders are plain weighted slopes of `C_m(j)/ln 2`.
pub fn cm_hat(
    table: &CumulantTable,
    p: PValue,
    eta_p: f64,
    weights: &RegressionWeights,
    corrected: bool,
) -> Result<Vec<f64>> {
    let corr = correction_params(p, eta_p, corrected)?;
    let idx = weights
        .octaves()
        .map(|j| {
            table
                .octaves
                .iter()
                .position(|&o| o == j)
                .ok_or_else(|| Error::InsufficientScales(format!("octave {j} missing from table")))
        })
        .collect::<Result<Vec<_>>>()?;
    let ln2 = std::f64::consts::LN_2;
    Ok((1..=table.m_max)
        .map(|m| {
            let vals: Vec<f64> = weights
                .octaves()
                .zip(&idx)
                .map(|(j, &i)| {
                    let mut v = table.c[i][m - 1];
                    if m == 1 {
                        if let Some((inv_p, eta)) = corr {
                            v -= inv_p * ln2 * (truncation_log2(j, eta) - truncation_log2(1, eta));
                        }
                    }
                    v
                })
                .collect();
            weights.slope(&vals) / ln2
        })
        .collect())
}

/// Sampled Legendre spectrum. `q` is empty when the spectrum is not
/// parametrized by moments (e.g. built from log-cumulants).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreSpectrum {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    pub l: Vec<f64>,
    pub d: usize,
}

impl LegendreSpectrum {
    /// `h` at the sample with the largest `L`.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .l
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bl), (i, &l)| if l > bl { (i, l) } else { (bi, bl) });
        self.h[i]
    }
}

/// Parametric (moment-weighted) Legendre spectrum of p-leaders.
pub fn legendre_parametric(
    leaders: &LeaderPyramid,
    q_grid: &[f64],
    p: PValue,
    eta_p: f64,
    weights: &RegressionWeights,
    corrected: bool,
) -> Result<LegendreSpectrum> {
    let samples = leader_samples(leaders, Some((weights.j1, weights.j2)))?;
    legendre_from(&samples, q_grid, p, eta_p, weights, corrected, leaders.dim.d())
}

/// Parametric development on generic samples: with `R = ℓ^q / Σ ℓ^q`,
/// `h(q) = Σ_j w_j (Σ_k R log2 ℓ - corr_j)` and
/// `L(q) = d + Σ_j w_j (Σ_k R log2 R + log2 n_j)`.
pub fn legendre_from(
    samples: &[ScaleSamples],
    q_grid: &[f64],
    p: PValue,
    eta_p: f64,
    weights: &RegressionWeights,
    corrected: bool,
    d: usize,
) -> Result<LegendreSpectrum> {
    let corr = correction_params(p, eta_p, corrected)?;
    let rows = weights
        .octaves()
        .map(|j| {
            samples
                .iter()
                .find(|s| s.j == j)
                .ok_or_else(|| Error::InsufficientScales(format!("octave {j} has no samples")))
        })
        .collect::<Result<Vec<_>>>()?;
    for s in &rows {
        if s.values.iter().any(|&v| v <= 0.0) && q_grid.iter().any(|&q| q <= 0.0) {
            return Err(Error::DegenerateData {
                octave: s.j,
                reason: "zero multiresolution quantity with non-positive q".into(),
            });
        }
    }
    let mut h = Vec::with_capacity(q_grid.len());
    let mut l = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let mut h_vals = Vec::with_capacity(rows.len());
        let mut l_vals = Vec::with_capacity(rows.len());
        for s in &rows {
            let logs: Vec<f64> = s.values.iter().map(|v| v.log2()).collect();
            let max = logs
                .iter()
                .filter(|x| x.is_finite())
                .fold(f64::NEG_INFINITY, |m, &x| m.max(q * x));
            let weights_r: Vec<f64> = logs
                .iter()
                .map(|&x| if x.is_finite() { ((q * x - max) * std::f64::consts::LN_2).exp() } else { 0.0 })
                .collect();
            let total: f64 = weights_r.iter().sum();
            let (mut mean_log, mut entropy) = (0.0, 0.0);
            for (&r, &x) in weights_r.iter().zip(&logs) {
                if r > 0.0 {
                    let rn = r / total;
                    mean_log += rn * x;
                    entropy += rn * rn.log2();
                }
            }
            if let Some((inv_p, eta)) = corr {
                mean_log -= inv_p * (truncation_log2(s.j, eta) - truncation_log2(1, eta));
            }
            h_vals.push(mean_log);
            l_vals.push(entropy + (s.values.len() as f64).log2());
        }
        h.push(weights.slope(&h_vals));
        l.push(d as f64 + weights.slope(&l_vals));
    }
    Ok(LegendreSpectrum {
        q: q_grid.to_vec(),
        h,
        l,
        d,
    })
}

/// Numerical Legendre transform `inf_q (d + q h - ζ(q))` over a sampled ζ.
pub fn legendre_numeric(q_grid: &[f64], zeta: &[f64], d: usize, h: f64) -> f64 {
    q_grid
        .iter()
        .zip(zeta)
        .map(|(&q, &z)| d as f64 + q * h - z)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub index: usize,
    pub h: f64,
    pub l: f64,
    /// `L - (d + h p)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: f64,
    pub tolerance: f64,
    pub violations: Vec<BoundViolation>,
    /// Largest `L - (d + h p)` over samples with `h <= 0` (0 if none exceed the line).
    pub max_violation: f64,
}

/// Checks `L(h) <= d + h p` for every `h <= 0` sample.
pub fn check_bound(spectrum: &LegendreSpectrum, p: f64, tolerance: f64) -> BoundReport {
    let d = spectrum.d as f64;
    let mut violations = Vec::new();
    let mut max_violation = 0.0f64;
    for (index, (&h, &l)) in spectrum.h.iter().zip(&spectrum.l).enumerate() {
        if h > 0.0 {
            continue;
        }
        let excess = l - (d + h * p);
        max_violation = max_violation.max(excess);
        if excess > tolerance {
            violations.push(BoundViolation { index, h, l, excess });
        }
    }
    BoundReport {
        p,
        tolerance,
        violations,
        max_violation,
    }
}

/// Spectrum from log-cumulants, `L(h) = d + Σ_{m=2}^{4} (C_m/m!) ((h - c1)/c2)^m`
/// with `C_2 = c2`, `C_3 = -c3`, `C_4 = -c4 + 3 c3²/c2`, sampled on
/// `c1 ± sqrt(-2 d c2)`.
pub fn cm_to_spectrum(c: &[f64], d: usize, n_points: usize) -> Result<LegendreSpectrum> {
    let get = |i: usize| c.get(i).copied().unwrap_or(0.0);
    let (c1, c2, c3, c4) = (get(0), get(1), get(2), get(3));
    if !(c2 < 0.0) {
        return Err(Error::InvalidExpansion(c2));
    }
    let k2 = c2;
    let k3 = -c3;
    let k4 = -c4 + 3.0 * c3 * c3 / c2;
    let half_width = (-2.0 * d as f64 * c2).sqrt();
    let n = n_points.max(2);
    let mut h = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n);
    for i in 0..n {
        let hv = c1 - half_width + 2.0 * half_width * i as f64 / (n - 1) as f64;
        let x = (hv - c1) / c2;
        h.push(hv);
        l.push(d as f64 + k2 / 2.0 * x * x + k3 / 6.0 * x.powi(3) + k4 / 24.0 * x.powi(4));
    }
    Ok(LegendreSpectrum {
        q: Vec::new(),
        h,
        l,
        d,
    })
}

/// Estimates derived from one multiresolution quantity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimates {
    pub source: Source,
    pub p: PValue,
    pub q_grid: Vec<f64>,
    pub zeta: Vec<f64>,
    /// `c_1..c_{m_max}`.
    pub cumulants: Vec<f64>,
    pub eta_p: Option<f64>,
    pub correction_applied: bool,
    pub j1: usize,
    pub j2: usize,
    pub confidence: Vec<f64>,
    pub weights: Vec<f64>,
    pub counts: Vec<usize>,
}

impl ScalingEstimates {
    /// Log-cumulant of order `m` (1-based), if estimated.
    pub fn c(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.cumulants.get(i).copied())
    }

    /// Shifts every exponent by `-shift`: ζ(q) → ζ(q) - q·shift, c1 → c1 - shift.
    pub fn shift_regularity(&mut self, shift: f64) {
        for (z, q) in self.zeta.iter_mut().zip(&self.q_grid) {
            *z -= q * shift;
        }
        if let Some(c1) = self.cumulants.first_mut() {
            *c1 -= shift;
        }
    }
}

/// Everything needed to turn per-scale samples into estimates.
#[derive(Debug, Clone)]
pub struct EstimationRequest<'a> {
    pub q_grid: &'a [f64],
    pub m_max: usize,
    pub p: PValue,
    /// `Some(η̂(p))` requests the finite-resolution correction.
    pub correction: Option<f64>,
    pub weights: &'a RegressionWeights,
    pub d: usize,
    pub source: Source,
}

/// Scaling function, log-cumulants and parametric Legendre spectrum of `samples`.
pub fn estimate_from_samples(
    samples: &[ScaleSamples],
    req: &EstimationRequest<'_>,
) -> Result<(ScalingEstimates, LegendreSpectrum)> {
    let w = req.weights;
    let used: Vec<ScaleSamples> = samples
        .iter()
        .filter(|s| w.octaves().contains(&s.j))
        .cloned()
        .collect();
    let corrected = req.correction.is_some();
    let eta = req.correction.unwrap_or(0.0);
    let table = structure_functions_from(&used, req.q_grid, req.source)?;
    let zeta = zeta_hat(&table, req.p, eta, w, corrected)?;
    let cum = cumulants_from(&used, req.m_max)?;
    let cumulants = cm_hat(&cum, req.p, eta, w, corrected)?;
    let spectrum = legendre_from(&used, req.q_grid, req.p, eta, w, corrected, req.d)?;
    Ok((
        ScalingEstimates {
            source: req.source,
            p: req.p,
            q_grid: req.q_grid.to_vec(),
            zeta,
            cumulants,
            eta_p: req.correction,
            correction_applied: corrected && !req.p.is_infinite(),
            j1: w.j1,
            j2: w.j2,
            confidence: w.b.clone(),
            weights: w.w.clone(),
            counts: table.n.clone(),
        },
        spectrum,
    ))
}

/// 41 points uniform on `[-5, 5]`, including `q = 0`.
pub fn default_q_grid() -> Vec<f64> {
    (-20..=20).map(|i| i as f64 * 0.25).collect()
}
