use rand::Rng;

use super::gaussian::{fgn, stationary_gaussian};
use super::{frac_diff_signal, log2_exact, rng_for, MrwParams};
use crate::dwt::daubechies_filter;
use crate::error::{Error, Result};

/// Log-volatility `ω` with covariance `λ² ln(L/(|Δ|+1))` for `|Δ| < L`
/// (0 beyond) and mean `-Var ω`.
pub fn gen_omega<R: Rng + ?Sized>(n: usize, lambda: f64, corr_len: usize, rng: &mut R) -> Result<Vec<f64>> {
    let l2 = lambda * lambda;
    let big_l = corr_len as f64;
    let cov = |lag: usize| {
        if lag < corr_len {
            l2 * (big_l / (lag as f64 + 1.0)).ln()
        } else {
            0.0
        }
    };
    let mean = -cov(0);
    let mut w = stationary_gaussian(n, cov, rng)?;
    w.iter_mut().for_each(|v| *v += mean);
    Ok(w)
}

/// `X(k) = Σ_{i<=k} G_H(i) e^{ω(i)}`, then differentiated to order `ν` in the
/// wavelet domain. `G_H` are increments of fractional Brownian motion on `[0, 1]`
/// sampled at `t = k/n`, so each has variance `n^{-2H}` and the walk is of
/// order one, on the same footing as trends defined on the unit interval.
pub fn gen_mrw(params: &MrwParams) -> Result<Vec<f64>> {
    let n = params.n;
    if log2_exact(n).is_none() || n < 16 {
        return Err(Error::InvalidParameter(format!("MRW length {n} is not a power of two >= 16")));
    }
    if !(params.hurst > 0.5 && params.hurst < 1.0) {
        return Err(Error::InvalidParameter(format!("Hurst index {} outside (1/2, 1)", params.hurst)));
    }
    if !(params.lambda >= 0.0) || !params.lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("intermittency {} must be >= 0", params.lambda)));
    }
    let corr_len = params.corr_len.unwrap_or(n);
    if corr_len == 0 {
        return Err(Error::InvalidParameter("correlation length must be positive".into()));
    }
    let mut rng = rng_for(params.seed);
    let g = fgn(n, params.hurst, &mut rng)?;
    let omega = gen_omega(n, params.lambda, corr_len, &mut rng)?;
    let step = (n as f64).powf(-params.hurst);
    let mut acc = 0.0;
    let x: Vec<f64> = g
        .iter()
        .zip(&omega)
        .map(|(gi, wi)| {
            acc += step * gi * wi.exp();
            acc
        })
        .collect();
    if params.nu == 0.0 {
        return Ok(x);
    }
    let filter = daubechies_filter(params.diff_vanishing_moments)?;
    frac_diff_signal(&x, params.nu, &filter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_variance_at_lag_zero() {
        let n = 1 << 12;
        let lambda = 0.08f64.sqrt();
        let target = lambda * lambda * (n as f64).ln();
        let reps = 200;
        let mut rng = rng_for(17);
        let mut draws = Vec::with_capacity(reps);
        for _ in 0..reps {
            let w = gen_omega(n, lambda, n, &mut rng).unwrap();
            draws.push(w[n / 2] + target);
        }
        let var = draws.iter().map(|v| v * v).sum::<f64>() / reps as f64;
        // Var of a Gaussian variance estimate: 2σ⁴/reps
        let se = (2.0 / reps as f64).sqrt() * target;
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target}");
    }

    #[test]
    fn deterministic_and_validated() {
        let p = MrwParams {
            n: 1 << 10,
            seed: 4,
            ..MrwParams::default()
        };
        assert_eq!(gen_mrw(&p).unwrap(), gen_mrw(&p).unwrap());
        let other = MrwParams { seed: 5, ..p.clone() };
        assert_ne!(gen_mrw(&p).unwrap(), gen_mrw(&other).unwrap());
        assert!(gen_mrw(&MrwParams { n: 1000, ..p.clone() }).is_err());
        assert!(gen_mrw(&MrwParams { hurst: 0.4, ..p }).is_err());
    }

    #[test]
    fn zero_intermittency_is_fbm() {
        let p = MrwParams {
            n: 1 << 10,
            lambda: 0.0,
            seed: 2,
            ..MrwParams::default()
        };
        let x = gen_mrw(&p).unwrap();
        let g = fgn(p.n, p.hurst, &mut rng_for(2)).unwrap();
        let step = (p.n as f64).powf(-p.hurst);
        let mut acc = 0.0;
        for (xi, gi) in x.iter().zip(&g) {
            acc += step * gi;
            assert!((xi - acc).abs() < 1e-12);
        }
    }
}
