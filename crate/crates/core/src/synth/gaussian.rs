//! Stationary Gaussian sequences by circulant embedding.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Largest number of doublings of the embedding size tried before giving up.
const MAX_PADDING_DOUBLINGS: u32 = 3;

/// Relative size below which negative circulant eigenvalues count as rounding.
const EIGEN_TOLERANCE: f64 = 1e-10;

/// Draws `n` samples of a zero-mean stationary Gaussian sequence with
/// autocovariance `autocov(lag)`.
///
/// The covariance is embedded in a circulant of size `2n`, doubled up to
/// three times if the embedding has a clearly negative eigenvalue.
pub fn stationary_gaussian<R: Rng + ?Sized>(
    n: usize,
    autocov: impl Fn(usize) -> f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut worst = 0.0;
    for doubling in 0..=MAX_PADDING_DOUBLINGS {
        let m = (2 * n) << doubling;
        let half = m / 2;
        let row: Vec<f64> = (0..m)
            .map(|i| autocov(if i <= half { i } else { m - i }))
            .collect();
        let eig = circulant_eigenvalues(&row);
        let max = eig.iter().cloned().fold(0.0f64, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min >= -EIGEN_TOLERANCE * max.max(f64::MIN_POSITIVE) {
            return Ok(sample_from_spectrum(&eig, n, rng));
        }
        worst = min;
    }
    Err(Error::EmbeddingFailure(worst))
}

fn circulant_eigenvalues(row: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = row.iter().map(|&r| Complex::new(r, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

fn sample_from_spectrum<R: Rng + ?Sized>(eig: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    let m = eig.len();
    let mut buf: Vec<Complex<f64>> = eig
        .iter()
        .map(|&e| {
            let s = (e.max(0.0) / m as f64).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(s * re, s * im)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf[..n].iter().map(|c| c.re).collect()
}

/// Autocovariance of unit-variance fractional Gaussian noise.
pub fn fgn_autocov(hurst: f64, lag: usize) -> f64 {
    let k = lag as f64;
    let e = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Unit-variance fractional Gaussian noise of length `n`.
pub fn fgn<R: Rng + ?Sized>(n: usize, hurst: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidParameter(format!("Hurst index {hurst} outside (0, 1)")));
    }
    stationary_gaussian(n, |k| fgn_autocov(hurst, k), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn white_noise_has_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = fgn(1 << 14, 0.5, &mut rng).unwrap();
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        // standard error of the variance estimate is sqrt(2/n) ~ 0.011
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn fgn_lag_one_correlation() {
        let hurst = 0.8;
        let n = 1 << 12;
        let reps = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..reps)
            .map(|_| {
                let x = fgn(n, hurst, &mut rng).unwrap();
                x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1) as f64
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let expected = 2f64.powf(2.0 * hurst - 1.0) - 1.0;
        assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected} (se {se})");
    }

    #[test]
    fn non_embeddable_covariance_fails() {
        // an oscillating "covariance" that is not positive definite
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = stationary_gaussian(64, |k| if k == 1 { 2.0 } else if k == 0 { 1.0 } else { 0.0 }, &mut rng);
        assert!(matches!(r, Err(Error::EmbeddingFailure(_))));
    }

    #[test]
    fn reproducible_given_seed() {
        let a = fgn(256, 0.7, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = fgn(256, 0.7, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }
}
