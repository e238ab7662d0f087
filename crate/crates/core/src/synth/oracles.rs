//! Closed-form multifractal properties of the synthetic processes.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::{CmcKind, CmcParams, LwsParams, MrwParams};
use crate::error::{Error, Result};

/// Scaling function of the deterministic binomial cascade, `1 - log2(w0^q + w1^q)`.
pub fn cascade_eta(omega0: f64, omega1: f64, q: f64) -> f64 {
    1.0 - (omega0.powf(q) + omega1.powf(q)).log2()
}

/// `(c1, c2)` of fractionally differentiated MRW: `(H + λ²/2 - ν, -λ²)`.
pub fn mrw_cumulants(params: &MrwParams) -> (f64, f64) {
    let l2 = params.lambda * params.lambda;
    (params.hurst + l2 / 2.0 - params.nu, -l2)
}

/// Wavelet scaling function `η(p)` of MRW.
///
/// Quadratic `c1 p + c2 p²/2` up to `p* = sqrt(-2/c2)`, then the tangent line
/// `1 + p (c1 - sqrt(-2 c2))` that keeps η continuous and concave.
pub fn mrw_eta(params: &MrwParams, p: f64) -> f64 {
    let (c1, c2) = mrw_cumulants(params);
    if c2 == 0.0 {
        return c1 * p;
    }
    let p_star = (-2.0 / c2).sqrt();
    if p <= p_star {
        c1 * p + c2 * p * p / 2.0
    } else {
        1.0 + p * (c1 - (-2.0 * c2).sqrt())
    }
}

/// Critical Lebesgue index of MRW, evaluated branch by branch.
pub fn mrw_p0(params: &MrwParams) -> Result<f64> {
    let (hh, lam, nu) = (params.hurst, params.lambda, params.nu);
    let lower = hh + lam * (lam / 2.0 - std::f64::consts::SQRT_2);
    let middle = hh + lam * (lam / 2.0 - std::f64::consts::FRAC_1_SQRT_2);
    let upper = hh + lam * lam / 2.0;
    if nu < 0.0 {
        return Err(Error::InvalidParameter(format!("differentiation order {nu} < 0")));
    }
    if nu <= lower {
        Ok(f64::INFINITY)
    } else if nu <= middle {
        Ok(1.0 / (nu - hh - lam * (lam / 2.0 - std::f64::consts::SQRT_2)))
    } else if nu <= upper {
        Ok(2.0 * (hh + lam * lam / 2.0 - nu) / (lam * lam))
    } else {
        Err(Error::NoValidP)
    }
}

/// `D(h)` of MRW: `1 + (c2/2)((h - c1)/c2)²` on `c1 ± sqrt(-2 c2)`, `-∞` elsewhere.
pub fn mrw_spectrum(params: &MrwParams, h: f64) -> f64 {
    let (c1, c2) = mrw_cumulants(params);
    let half = (-2.0 * c2).sqrt();
    if (h - c1).abs() > half {
        return f64::NEG_INFINITY;
    }
    1.0 + c2 / 2.0 * ((h - c1) / c2).powi(2)
}

/// The p-spectrum of a lacunary wavelet series: the segment from
/// `(α, η)` up to `(α/η + (1/η - 1)/p, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LwsSpectrum {
    pub left: f64,
    pub right: f64,
    pub lacunarity: f64,
    pub alpha: f64,
    pub inv_p: f64,
}

impl LwsSpectrum {
    pub fn at(&self, h: f64) -> f64 {
        if h < self.left - 1e-12 || h > self.right + 1e-12 {
            return f64::NEG_INFINITY;
        }
        self.lacunarity * (h + self.inv_p) / (self.alpha + self.inv_p)
    }
}

/// `p` may be `f64::INFINITY` for wavelet leaders.
pub fn lws_spectrum(alpha: f64, lacunarity: f64, p: f64) -> Result<LwsSpectrum> {
    if !(alpha > 0.0) || !(lacunarity > 0.0 && lacunarity < 1.0) || !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "LWS spectrum needs alpha > 0, lacunarity in (0,1), p > 0; got {alpha}, {lacunarity}, {p}"
        )));
    }
    let inv_p = 1.0 / p;
    Ok(LwsSpectrum {
        left: alpha,
        right: alpha / lacunarity + (1.0 / lacunarity - 1.0) * inv_p,
        lacunarity,
        alpha,
        inv_p,
    })
}

pub fn lws_oracle(params: &LwsParams, p: f64) -> Result<LwsSpectrum> {
    lws_spectrum(params.alpha, params.lacunarity, p)
}

/// `log2 E[W^q]` for the cascade multiplier.
pub fn cmc_log2_moment(kind: &CmcKind, q: f64) -> f64 {
    match *kind {
        // U ~ N(m, 2m/ln2): log2 E[2^{-qU}] = -q m + q² m
        CmcKind::LogNormal { m } => -q * m + q * q * m,
        CmcKind::LogPoisson { beta, gamma } => {
            let rate = cmc_poisson_rate(beta, gamma);
            gamma * q + rate * (beta.powf(q) - 1.0) / LN_2
        }
    }
}

/// Poisson parameter `-γ ln2 / (β - 1)` of the log-Poisson multiplier.
pub fn cmc_poisson_rate(beta: f64, gamma: f64) -> f64 {
    -gamma * LN_2 / (beta - 1.0)
}

/// Scaling function `ζ(q) = α q - log2 E[W^q]` of the integrated cascade.
pub fn cmc_zeta(params: &CmcParams, q: f64) -> f64 {
    params.alpha * q - cmc_log2_moment(&params.kind, q)
}

/// `c1..c4` of the integrated 2D cascade.
///
/// Log-normal: `(m + α, -2m, 0, 0)`. Log-Poisson: `c1 = α + γ(ln β/(β-1) - 1)`
/// and `c_m = γ (ln β)^m / (β - 1)` for `m >= 2`, the Taylor coefficients of
/// `-log2 E[W^q]`.
pub fn cmc_cumulants(params: &CmcParams) -> [f64; 4] {
    match params.kind {
        CmcKind::LogNormal { m } => [m + params.alpha, -2.0 * m, 0.0, 0.0],
        CmcKind::LogPoisson { beta, gamma } => {
            let lb = beta.ln();
            let cm = |m: i32| gamma * lb.powi(m) / (beta - 1.0);
            [params.alpha + gamma * (lb / (beta - 1.0) - 1.0), cm(2), cm(3), cm(4)]
        }
    }
}

/// Exact 2D spectrum `D(h)`, `-∞` outside the support.
pub fn cmc_spectrum(params: &CmcParams, h: f64) -> f64 {
    match params.kind {
        CmcKind::LogNormal { m } => {
            let v = 2.0 - (h - params.alpha - m).powi(2) / (4.0 * m);
            if v < 0.0 {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
        CmcKind::LogPoisson { beta, gamma } => {
            let x = -params.alpha + gamma + h;
            let arg = x * (beta - 1.0) / (gamma * beta.ln());
            if !(arg > 0.0) {
                return f64::NEG_INFINITY;
            }
            let v = 2.0 + gamma / (beta - 1.0) + x / beta.ln() * (arg.ln() - 1.0);
            if v < 0.0 {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
    }
}
