use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{frac_diff_field, log2_exact, oracles::cmc_poisson_rate, rng_for, CmcKind, CmcParams};
use crate::dwt::daubechies_filter;
use crate::error::{Error, Result};

fn check_kind(kind: &CmcKind) -> Result<()> {
    match *kind {
        CmcKind::LogNormal { m } if m > 0.0 && m.is_finite() => Ok(()),
        CmcKind::LogPoisson { beta, gamma } if beta > 0.0 && beta < 1.0 && gamma > 0.0 => Ok(()),
        other => Err(Error::InvalidParameter(format!("invalid cascade multiplier law {other:?}"))),
    }
}

enum Sampler {
    LogNormal(Normal<f64>),
    LogPoisson { poisson: Poisson<f64>, gain: f64, log_beta: f64 },
}

impl Sampler {
    fn new(kind: &CmcKind) -> Result<Self> {
        check_kind(kind)?;
        Ok(match *kind {
            CmcKind::LogNormal { m } => Sampler::LogNormal(
                Normal::new(m, (2.0 * m / std::f64::consts::LN_2).sqrt())
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?,
            ),
            CmcKind::LogPoisson { beta, gamma } => Sampler::LogPoisson {
                poisson: Poisson::new(cmc_poisson_rate(beta, gamma))
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?,
                gain: 2f64.powf(gamma),
                log_beta: beta.ln(),
            },
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::LogNormal(normal) => 2f64.powf(-normal.sample(rng)),
            Sampler::LogPoisson { poisson, gain, log_beta } => gain * (log_beta * poisson.sample(rng)).exp(),
        }
    }
}

/// `count` independent cascade multipliers.
pub fn cascade_multipliers(kind: &CmcKind, count: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = Sampler::new(kind)?;
    let mut rng = rng_for(seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

/// Multiplicative cascade density on a `side × side` grid (row-major), before integration.
pub fn cascade_field(kind: &CmcKind, side: usize, seed: u64) -> Result<Vec<f64>> {
    let levels = log2_exact(side)
        .ok_or_else(|| Error::InvalidParameter(format!("cascade side {side} is not a power of two")))?;
    let sampler = Sampler::new(kind)?;
    let mut rng = rng_for(seed);
    let mut field = vec![1.0];
    let mut s = 1usize;
    for _ in 0..levels {
        let t = 2 * s;
        let mut next = vec![0.0; t * t];
        for r in 0..s {
            for c in 0..s {
                let parent = field[r * s + c];
                for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    next[(2 * r + dr) * t + 2 * c + dc] = parent * sampler.draw(&mut rng);
                }
            }
        }
        field = next;
        s = t;
    }
    Ok(field)
}

/// Cascade density fractionally integrated to order `α` in the wavelet domain.
pub fn gen_cmc2d(params: &CmcParams) -> Result<Vec<f64>> {
    if !(params.alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("integration order {} < 0", params.alpha)));
    }
    let field = cascade_field(&params.kind, params.side, params.seed)?;
    if params.alpha == 0.0 {
        return Ok(field);
    }
    let filter = daubechies_filter(params.integration_vanishing_moments)?;
    frac_diff_field(&field, params.side, -params.alpha, &filter)
}
