//! Synthetic multifractal processes with known scaling properties.
//!
//! Every generator is a deterministic function of its parameters and seed.

mod cmc;
pub mod gaussian;
mod mrw;
pub mod oracles;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dwt::{
    dwt1d, dwt2d, idwt1d, idwt2d, max_octaves_for, CoefficientPyramid, WaveletFilter,
};
use crate::error::{Error, Result};

pub use cmc::{cascade_multipliers, gen_cmc2d};
pub use mrw::{gen_mrw, gen_omega};

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log2_exact(n: usize) -> Option<u32> {
    n.is_power_of_two().then(|| n.trailing_zeros())
}

/// Multifractal random walk, optionally fractionally differentiated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MrwParams {
    pub hurst: f64,
    pub lambda: f64,
    /// Correlation length of the log-volatility; `None` means `n`.
    pub corr_len: Option<usize>,
    pub n: usize,
    pub nu: f64,
    /// Vanishing moments of the wavelet used for fractional differentiation.
    pub diff_vanishing_moments: usize,
    pub seed: u64,
}

impl Default for MrwParams {
    fn default() -> Self {
        MrwParams {
            hurst: 0.72,
            lambda: 0.08f64.sqrt(),
            corr_len: None,
            n: 1 << 16,
            nu: 0.0,
            diff_vanishing_moments: 2,
            seed: 0,
        }
    }
}

/// Lacunary wavelet series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LwsParams {
    pub alpha: f64,
    pub lacunarity: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for LwsParams {
    fn default() -> Self {
        LwsParams {
            alpha: 0.2,
            lacunarity: 0.8,
            n: 1 << 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CmcKind {
    /// `W = 2^{-U}`, `U ~ N(m, 2m/ln 2)`.
    LogNormal { m: f64 },
    /// `W = 2^γ β^π`, `π ~ Poisson(-γ ln2/(β-1))`.
    LogPoisson { beta: f64, gamma: f64 },
}

/// 2D canonical Mandelbrot cascade followed by fractional integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmcParams {
    #[serde(flatten)]
    pub kind: CmcKind,
    pub side: usize,
    pub alpha: f64,
    /// Vanishing moments of the wavelet used for the integration.
    pub integration_vanishing_moments: usize,
    pub seed: u64,
}

impl Default for CmcParams {
    fn default() -> Self {
        CmcParams {
            kind: CmcKind::LogNormal { m: 0.04 },
            side: 1 << 10,
            alpha: 0.2,
            integration_vanishing_moments: 2,
            seed: 0,
        }
    }
}

/// Coefficient pyramid of the deterministic binomial cascade and its multipliers.
#[derive(Debug, Clone)]
pub struct CascadeSample {
    pub pyramid: CoefficientPyramid,
    pub omega0: f64,
    pub omega1: f64,
}

impl CascadeSample {
    /// Exact scaling function `1 - log2(w0^q + w1^q)`.
    pub fn eta(&self, q: f64) -> f64 {
        oracles::cascade_eta(self.omega0, self.omega1, q)
    }
}

/// Wavelet coefficients built by the refinement `c(j-1, 2k) = w0 c(j,k)`,
/// `c(j-1, 2k+1) = w1 c(j,k)` from a single unit coefficient at octave `levels`.
pub fn gen_deterministic_cascade(omega0: f64, omega1: f64, levels: usize) -> Result<CascadeSample> {
    if !(omega0 > 0.0 && omega1 > 0.0) || !omega0.is_finite() || !omega1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cascade multipliers must be positive, got {omega0}, {omega1}"
        )));
    }
    if !(4..=30).contains(&levels) {
        return Err(Error::InvalidParameter(format!("cascade depth {levels} outside 4..=30")));
    }
    let mut octaves = vec![vec![1.0]];
    for _ in 1..levels {
        let parent = octaves.last().unwrap();
        let child: Vec<f64> = parent
            .iter()
            .flat_map(|&c| [omega0 * c, omega1 * c])
            .collect();
        octaves.push(child);
    }
    octaves.reverse();
    Ok(CascadeSample {
        pyramid: CoefficientPyramid::from_octaves_1d(octaves)?,
        omega0,
        omega1,
    })
}

/// Multiplies octave `j` by `a_j^{-ν}` with the normalized scale `a_j = 2^{j-J}`,
/// `J = log2` of the sample count (side length in 2D).
pub fn frac_diff(pyramid: &CoefficientPyramid, nu: f64) -> Result<CoefficientPyramid> {
    if !(nu.abs() < 2.0) {
        return Err(Error::UnsupportedOrder(nu));
    }
    let total = log2_exact(pyramid.sample_count).ok_or_else(|| {
        Error::InvalidInput(format!(
            "fractional differentiation needs a dyadic size, got {}",
            pyramid.sample_count
        ))
    })? as f64;
    let mut out = pyramid.clone();
    for (idx, oct) in out.octaves.iter_mut().enumerate() {
        let j = (idx + 1) as f64;
        let gain = 2f64.powf((total - j) * nu);
        for band in &mut oct.bands {
            band.iter_mut().for_each(|c| *c *= gain);
        }
    }
    Ok(out)
}

/// Signal-domain fractional differentiation (negative `nu` integrates).
pub fn frac_diff_signal(signal: &[f64], nu: f64, filter: &WaveletFilter) -> Result<Vec<f64>> {
    if nu == 0.0 {
        return Ok(signal.to_vec());
    }
    let pyr = dwt1d(signal, filter, None)?;
    let diff = frac_diff(&pyr, nu)?;
    idwt1d(&diff, &pyr.approx)
}

/// Field-domain fractional differentiation of a square field.
pub fn frac_diff_field(field: &[f64], side: usize, nu: f64, filter: &WaveletFilter) -> Result<Vec<f64>> {
    if nu == 0.0 {
        return Ok(field.to_vec());
    }
    let pyr = dwt2d(field, side, filter, None)?;
    let diff = frac_diff(&pyr, nu)?;
    idwt2d(&diff, &pyr.approx)
}

/// Lacunary wavelet series: octave `j` holds exactly `round(2^{η(J-j)})` nonzero
/// coefficients of amplitude `2^{α(j-J)}` at distinct random positions.
pub fn lws_pyramid(params: &LwsParams, filter: &WaveletFilter) -> Result<CoefficientPyramid> {
    if !(params.alpha > 0.0) || !(params.lacunarity > 0.0 && params.lacunarity < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "LWS needs alpha > 0 and lacunarity in (0,1), got {} and {}",
            params.alpha, params.lacunarity
        )));
    }
    let total = log2_exact(params.n)
        .ok_or_else(|| Error::InvalidParameter(format!("LWS length {} is not a power of two", params.n)))?
        as usize;
    let levels = max_octaves_for(params.n, filter.len());
    if levels < 3 {
        return Err(Error::InsufficientData(format!("LWS length {} too short", params.n)));
    }
    let mut rng = rng_for(params.seed);
    let mut octaves = Vec::with_capacity(levels);
    for j in 1..=levels {
        let size = params.n >> j;
        let count = 2f64.powf(params.lacunarity * (total - j) as f64).round() as usize;
        if count > size {
            return Err(Error::ParameterInconsistency(format!(
                "{count} nonzero coefficients requested at octave {j} of size {size}"
            )));
        }
        let amplitude = 2f64.powf(params.alpha * (j as f64 - total as f64));
        let mut coeffs = vec![0.0; size];
        for pos in sample(&mut rng, size, count) {
            coeffs[pos] = amplitude;
        }
        octaves.push(coeffs);
    }
    let mut pyr = CoefficientPyramid::from_octaves_1d(octaves)?;
    pyr.filter = Some(filter.clone());
    pyr.approx = vec![0.0; params.n >> levels];
    Ok(pyr)
}

pub fn gen_lws(params: &LwsParams, filter: &WaveletFilter) -> Result<Vec<f64>> {
    let pyr = lws_pyramid(params, filter)?;
    idwt1d(&pyr, &pyr.approx)
}

/// Additive trend sampled on `t_k = k/(n-1)`, `t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Trend {
    /// `100 (t + 1/100)^{-1/2}`.
    Cusp,
    /// `Σ_i coeffs[i] t^i`.
    Polynomial { coeffs: Vec<f64> },
}

impl Trend {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Trend::Cusp => 100.0 / (t + 0.01).sqrt(),
            Trend::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c),
        }
    }
}

pub fn add_trend(signal: &[f64], trend: &Trend) -> Vec<f64> {
    let n = signal.len();
    let denom = (n.max(2) - 1) as f64;
    signal
        .iter()
        .enumerate()
        .map(|(k, &x)| x + trend.value(k as f64 / denom))
        .collect()
}
