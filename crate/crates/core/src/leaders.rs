//! p-leaders, the wavelet scaling function η(p), h^min and the critical index p₀.

use serde::{Deserialize, Serialize};

use crate::dwt::{CoefficientPyramid, Dim};
use crate::error::{Error, Result};
use crate::formalism::{regression_weights, RegressionWeights, Weighting};
use crate::stats::{log2_mean_pow, PValue};

/// Octaves entering a leader at scale `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Neighborhood {
    /// The cube and its `3^d - 1` neighbours. Values are truncated at the signal
    /// edges and such leaders are marked invalid.
    Full,
    /// The cube alone.
    Restricted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderOctave {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl LeaderOctave {
    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Values at valid positions, in grid order.
    pub fn valid_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.valid)
            .filter_map(|(&v, &ok)| ok.then_some(v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderPyramid {
    pub p: PValue,
    pub mode: Neighborhood,
    pub dim: Dim,
    /// `octaves[0]` is `j = 1`.
    pub octaves: Vec<LeaderOctave>,
}

impl LeaderPyramid {
    pub fn num_octaves(&self) -> usize {
        self.octaves.len()
    }

    pub fn octave(&self, j: usize) -> &LeaderOctave {
        &self.octaves[j - 1]
    }

    pub fn valid_counts(&self) -> Vec<usize> {
        self.octaves.iter().map(LeaderOctave::n_valid).collect()
    }

    /// Coarsest octave holding at least `min_valid` valid leaders.
    pub fn coarsest_with(&self, min_valid: usize) -> Option<usize> {
        (1..=self.num_octaves())
            .rev()
            .find(|&j| self.octave(j).n_valid() >= min_valid)
    }
}

/// Computes p-leaders from an L¹ coefficient pyramid.
///
/// Restricted sums are accumulated fine-to-coarse,
/// `R(j,k) = Σ_i |c_i(j,k)|^p + 2^{-d} Σ_children R(j-1, child)`, and the
/// full leader combines `R` over the neighbourhood. The sum always stops at
/// the finest available octave. `p = ∞` replaces sums by maxima.
pub fn compute_p_leaders(
    pyramid: &CoefficientPyramid,
    p: PValue,
    mode: Neighborhood,
) -> Result<LeaderPyramid> {
    if let PValue::Finite(pv) = p {
        if !(pv > 0.0) || !pv.is_finite() {
            return Err(Error::InvalidParameter(format!("p must be positive, got {pv}")));
        }
    }
    if pyramid.octaves.is_empty() {
        return Err(Error::InvalidInput("empty coefficient pyramid".into()));
    }
    let d = pyramid.dim.d();
    let child_weight = 2f64.powi(-(d as i32));

    let mut out = Vec::with_capacity(pyramid.num_octaves());
    let mut prev_sum: Vec<f64> = Vec::new();
    let mut prev_valid: Vec<bool> = Vec::new();
    let mut prev_cols = 0usize;
    for (idx, oct) in pyramid.octaves.iter().enumerate() {
        let (rows, cols) = (oct.rows, oct.cols);
        let mut sum = vec![0.0; rows * cols];
        let mut valid = oct.valid.clone();
        for (pos, s) in sum.iter_mut().enumerate() {
            *s = match p {
                PValue::Finite(pv) => oct.bands.iter().map(|b| b[pos].abs().powf(pv)).sum(),
                PValue::Infinite => oct.max_abs_at(pos),
            };
        }
        if idx > 0 {
            for r in 0..rows {
                for c in 0..cols {
                    let pos = r * cols + c;
                    let children: &[(usize, usize)] = match pyramid.dim {
                        Dim::One => &[(0, 0), (0, 1)],
                        Dim::Two => &[(0, 0), (0, 1), (1, 0), (1, 1)],
                    };
                    for &(dr, dc) in children {
                        let child = (2 * r + dr) * prev_cols + 2 * c + dc;
                        match p {
                            PValue::Finite(_) => sum[pos] += child_weight * prev_sum[child],
                            PValue::Infinite => sum[pos] = sum[pos].max(prev_sum[child]),
                        }
                        valid[pos] &= prev_valid[child];
                    }
                }
            }
        }

        let (values, leader_valid) = match mode {
            Neighborhood::Restricted => (sum.clone(), valid.clone()),
            Neighborhood::Full => combine_neighbours(&sum, &valid, rows, cols, p),
        };
        let values = match p {
            PValue::Finite(pv) => values.into_iter().map(|v| v.powf(1.0 / pv)).collect(),
            PValue::Infinite => values,
        };
        out.push(LeaderOctave {
            rows,
            cols,
            values,
            valid: leader_valid,
        });
        prev_sum = sum;
        prev_valid = valid;
        prev_cols = cols;
    }
    Ok(LeaderPyramid {
        p,
        mode,
        dim: pyramid.dim,
        octaves: out,
    })
}

fn combine_neighbours(
    sum: &[f64],
    valid: &[bool],
    rows: usize,
    cols: usize,
    p: PValue,
) -> (Vec<f64>, Vec<bool>) {
    let mut values = vec![0.0; sum.len()];
    let mut ok = vec![true; sum.len()];
    for r in 0..rows {
        let r_lo = r.saturating_sub(1);
        let r_hi = (r + 1).min(rows - 1);
        for c in 0..cols {
            let c_lo = c.saturating_sub(1);
            let c_hi = (c + 1).min(cols - 1);
            let pos = r * cols + c;
            // a neighbourhood cut by the signal edge biases the leader low
            let cut = c == 0 || c + 1 == cols || (rows > 1 && (r == 0 || r + 1 == rows));
            ok[pos] = !cut;
            let mut acc = 0.0f64;
            for nr in r_lo..=r_hi {
                for nc in c_lo..=c_hi {
                    let n = nr * cols + nc;
                    acc = match p {
                        PValue::Finite(_) => acc + sum[n],
                        PValue::Infinite => acc.max(sum[n]),
                    };
                    ok[pos] &= valid[n];
                }
            }
            values[pos] = acc;
        }
    }
    (values, ok)
}

fn check_range(j1: usize, j2: usize, available: usize) -> Result<()> {
    if j1 < 1 || j2 > available || j2 < j1 + 2 {
        return Err(Error::InsufficientScales(format!(
            "regression range {j1}..={j2} needs at least 3 octaves within 1..={available}"
        )));
    }
    Ok(())
}

/// `log2 S_c(j, p)`: log of the per-position mean of `Σ_i |c_i|^p` over valid positions.
pub fn log2_coefficient_moment(pyramid: &CoefficientPyramid, j: usize, p: f64) -> Result<f64> {
    let oct = pyramid.octave(j);
    let sums: Vec<f64> = (0..oct.len())
        .filter(|&pos| oct.valid[pos])
        .map(|pos| oct.bands.iter().map(|b| b[pos].abs().powf(p)).sum::<f64>())
        .collect();
    log2_mean_pow(&sums, 1.0).ok_or_else(|| Error::DegenerateData {
        octave: j,
        reason: "no nonzero valid wavelet coefficient".into(),
    })
}

/// Regression weights over `j1..=j2` with `b_j` taken from valid coefficient counts.
pub fn coefficient_weights(
    pyramid: &CoefficientPyramid,
    j1: usize,
    j2: usize,
    weighting: Weighting,
) -> Result<RegressionWeights> {
    check_range(j1, j2, pyramid.num_octaves())?;
    let counts = pyramid.valid_counts();
    let b: Vec<f64> = (j1..=j2)
        .map(|j| match weighting {
            Weighting::Counts => counts[j - 1] as f64,
            Weighting::Uniform => 1.0,
        })
        .collect();
    regression_weights(j1, j2, &b)
}

/// Estimate of the wavelet scaling function, `η̂(p) = Σ_j w_j log2 S_c(j,p)`,
/// with `b_j = n_j` weights.
pub fn eta_hat(pyramid: &CoefficientPyramid, p: f64, j1: usize, j2: usize) -> Result<f64> {
    let w = coefficient_weights(pyramid, j1, j2, Weighting::Counts)?;
    eta_hat_weighted(pyramid, p, &w)
}

pub fn eta_hat_weighted(
    pyramid: &CoefficientPyramid,
    p: f64,
    weights: &RegressionWeights,
) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    check_range(weights.j1, weights.j2, pyramid.num_octaves())?;
    let logs = (weights.j1..=weights.j2)
        .map(|j| log2_coefficient_moment(pyramid, j, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(weights.slope(&logs))
}

/// Slope of `log2 max |c(j,·)|` against `j`.
pub fn hmin(pyramid: &CoefficientPyramid, j1: usize, j2: usize) -> Result<f64> {
    let w = coefficient_weights(pyramid, j1, j2, Weighting::Counts)?;
    hmin_weighted(pyramid, &w)
}

pub fn hmin_weighted(pyramid: &CoefficientPyramid, weights: &RegressionWeights) -> Result<f64> {
    check_range(weights.j1, weights.j2, pyramid.num_octaves())?;
    let logs = (weights.j1..=weights.j2)
        .map(|j| {
            let oct = pyramid.octave(j);
            let m = (0..oct.len())
                .filter(|&pos| oct.valid[pos])
                .fold(0.0f64, |m, pos| m.max(oct.max_abs_at(pos)));
            if m > 0.0 {
                Ok(m.log2())
            } else {
                Err(Error::DegenerateData {
                    octave: j,
                    reason: "all valid wavelet coefficients are zero".into(),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(weights.slope(&logs))
}

/// p grid used to locate the critical index.
pub const P0_GRID: [f64; 11] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletScalingFunction {
    pub p_grid: Vec<f64>,
    pub eta: Vec<f64>,
    pub j1: usize,
    pub j2: usize,
    pub weights: Vec<f64>,
}

impl WaveletScalingFunction {
    pub fn estimate(
        pyramid: &CoefficientPyramid,
        p_grid: &[f64],
        weights: &RegressionWeights,
    ) -> Result<Self> {
        let eta = p_grid
            .iter()
            .map(|&p| eta_hat_weighted(pyramid, p, weights))
            .collect::<Result<Vec<_>>>()?;
        Ok(WaveletScalingFunction {
            p_grid: p_grid.to_vec(),
            eta,
            j1: weights.j1,
            j2: weights.j2,
            weights: weights.w.clone(),
        })
    }

    /// Largest interior amount by which η̂ falls below a chord.
    pub fn concavity_violation(&self) -> f64 {
        crate::stats::concavity_violation(&self.p_grid, &self.eta)
    }
}

/// Critical Lebesgue index `sup{p : η̂(p) > 0}` on the grid.
///
/// The zero crossing is linearly interpolated. When η̂ is still positive at
/// the last grid point the result is infinity if η̂ is non-decreasing there,
/// and the linear extrapolation of the last segment otherwise.
pub fn p0_hat(curve: &WaveletScalingFunction) -> Result<PValue> {
    let p = &curve.p_grid;
    let eta = &curve.eta;
    let last_pos = eta.iter().rposition(|&e| e > 0.0).ok_or(Error::NoValidP)?;
    let n = p.len();
    if last_pos + 1 < n {
        let (p_a, p_b) = (p[last_pos], p[last_pos + 1]);
        let (e_a, e_b) = (eta[last_pos], eta[last_pos + 1]);
        return Ok(PValue::Finite(p_a + e_a * (p_b - p_a) / (e_a - e_b)));
    }
    if n < 2 {
        return Ok(PValue::Infinite);
    }
    let slope = (eta[n - 1] - eta[n - 2]) / (p[n - 1] - p[n - 2]);
    if slope >= 0.0 {
        Ok(PValue::Infinite)
    } else {
        Ok(PValue::Finite(p[n - 1] + eta[n - 1] / -slope))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_spike(levels: usize, k0: usize) -> CoefficientPyramid {
        let n1 = 1usize << levels;
        let octaves = (1..=levels)
            .map(|j| {
                let mut c = vec![0.0; n1 >> (j - 1)];
                if j == 1 {
                    c[k0] = 1.0;
                }
                c
            })
            .collect();
        CoefficientPyramid::from_octaves_1d(octaves).unwrap()
    }

    #[test]
    fn single_coefficient_p2() {
        let pyr = single_spike(6, 9);
        let l = compute_p_leaders(&pyr, PValue::Finite(2.0), Neighborhood::Full).unwrap();
        // octave 3 cube above k0 = 9 is 9 >> 2 = 2
        let v = l.octave(3).values[2];
        assert!((v - 0.5).abs() < 1e-15, "{v}");
        let linf = compute_p_leaders(&pyr, PValue::Infinite, Neighborhood::Full).unwrap();
        for j in 2..=6 {
            assert_eq!(linf.octave(j).values[9 >> (j - 1)], 1.0);
        }
    }

    #[test]
    fn rejects_bad_p_and_empty() {
        let pyr = single_spike(4, 0);
        assert!(matches!(
            compute_p_leaders(&pyr, PValue::Finite(0.0), Neighborhood::Full),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            compute_p_leaders(&pyr, PValue::Finite(-1.0), Neighborhood::Full),
            Err(Error::InvalidParameter(_))
        ));
        let empty = CoefficientPyramid {
            octaves: vec![],
            ..pyr
        };
        assert!(matches!(
            compute_p_leaders(&empty, PValue::Finite(1.0), Neighborhood::Full),
            Err(Error::InvalidInput(_))
        ));
    }

    fn power_law(levels: usize, h: f64) -> CoefficientPyramid {
        let octaves = (1..=levels)
            .map(|j| vec![2f64.powf(j as f64 * h); 1 << (levels + 4 - j)])
            .collect();
        CoefficientPyramid::from_octaves_1d(octaves).unwrap()
    }

    #[test]
    fn monofractal_eta_and_hmin() {
        let pyr = power_law(10, 0.5);
        assert!((eta_hat(&pyr, 1.0, 1, 10).unwrap() - 0.5).abs() < 1e-10);
        let pyr = power_law(10, 0.7);
        assert!((hmin(&pyr, 2, 9).unwrap() - 0.7).abs() < 1e-10);
        assert!(matches!(eta_hat(&pyr, 1.0, 3, 4), Err(Error::InsufficientScales(_))));
        assert!(matches!(hmin(&pyr, 8, 11), Err(Error::InsufficientScales(_))));
    }

    #[test]
    fn p0_on_monofractal_is_infinite() {
        let pyr = power_law(10, 0.4);
        let w = coefficient_weights(&pyr, 1, 10, Weighting::Counts).unwrap();
        let curve = WaveletScalingFunction::estimate(&pyr, &P0_GRID, &w).unwrap();
        assert_eq!(p0_hat(&curve).unwrap(), PValue::Infinite);
    }

    #[test]
    fn p0_interpolation_and_errors() {
        let curve = WaveletScalingFunction {
            p_grid: vec![1.0, 2.0, 4.0],
            eta: vec![0.3, 0.1, -0.1],
            j1: 1,
            j2: 3,
            weights: vec![],
        };
        assert_eq!(p0_hat(&curve).unwrap(), PValue::Finite(3.0));
        let neg = WaveletScalingFunction {
            eta: vec![-0.1, -0.2, -0.3],
            ..curve.clone()
        };
        assert!(matches!(p0_hat(&neg), Err(Error::NoValidP)));
        let decaying = WaveletScalingFunction {
            eta: vec![0.5, 0.4, 0.2],
            ..curve
        };
        // slope -0.1 per unit p from 4 → zero at 6
        match p0_hat(&decaying).unwrap() {
            PValue::Finite(v) => assert!((v - 6.0).abs() < 1e-12),
            PValue::Infinite => panic!("expected finite"),
        }
    }
}
