//! Orthonormal periodic discrete wavelet transforms (1D and 2D tensor product)
//! with L¹-normalized coefficient pyramids.
//!
//! Octave `j = 1` is the finest scale. Coefficient `c(j, k)` is computed from
//! approximation samples `2k .. 2k + F - 1` of the previous level, so its
//! support starts at `2^j k` in sample units. Positions whose support wraps
//! around the periodic boundary are masked invalid rather than corrected.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of valid coefficients the coarsest kept octave must hold.
pub const MIN_VALID_COARSEST: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletFilter {
    pub family: String,
    pub vanishing_moments: usize,
    /// Orthonormal lowpass taps, minimum phase, summing to √2.
    pub lowpass: Vec<f64>,
}

impl WaveletFilter {
    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// Quadrature mirror highpass: `h[m] = (-1)^m g[F-1-m]`.
    pub fn highpass(&self) -> Vec<f64> {
        let f = self.lowpass.len();
        (0..f)
            .map(|m| {
                let s = if m % 2 == 0 { 1.0 } else { -1.0 };
                s * self.lowpass[f - 1 - m]
            })
            .collect()
    }
}

/// Daubechies minimum-phase filter with `n_vanishing_moments` vanishing moments.
///
/// Built by spectral factorization: the roots of the Daubechies polynomial
/// `P(y) = Σ_{k<N} C(N-1+k, k) y^k` are mapped to `x = z⁻¹` roots outside the
/// unit circle and multiplied with `(1 + x)^N`.
pub fn daubechies_filter(n_vanishing_moments: usize) -> Result<WaveletFilter> {
    let n = n_vanishing_moments;
    if !(1..=10).contains(&n) {
        return Err(Error::UnsupportedFilter(n));
    }
    // P(y), ascending powers
    let p_coeffs: Vec<f64> = (0..n).map(|k| binomial(n - 1 + k, k)).collect();
    let y_roots = polynomial_roots(&p_coeffs);

    // (1 + x)^N
    let mut poly: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n {
        poly = poly_mul(&poly, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
    }
    for y in y_roots {
        // x + 1/x = 2 - 4y; keep the root with |x| > 1
        let b = Complex64::new(2.0, 0.0) - y * 4.0;
        let disc = (b * b - 4.0).sqrt();
        let x1 = (b + disc) / 2.0;
        let x2 = (b - disc) / 2.0;
        let x = if x1.norm() > x2.norm() { x1 } else { x2 };
        poly = poly_mul(&poly, &[-x, Complex64::new(1.0, 0.0)]);
    }
    let taps: Vec<f64> = poly.iter().map(|c| c.re).collect();
    let sum: f64 = taps.iter().sum();
    let scale = std::f64::consts::SQRT_2 / sum;
    let lowpass = taps.into_iter().map(|t| t * scale).collect();
    Ok(WaveletFilter {
        family: format!("db{n}"),
        vanishing_moments: n,
        lowpass,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_eval(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

fn poly_deriv_eval(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (i, &c)| acc * x + c * i as f64)
}

/// Roots of a real polynomial (ascending coefficients) by Durand–Kerner
/// iteration followed by Newton polishing.
fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..degree].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|i| seed.powu(i as u32) * (radius / 2.0))
        .collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..degree {
            let xi = roots[i];
            let mut denom = Complex64::new(1.0, 0.0);
            for (k, &xk) in roots.iter().enumerate() {
                if k != i {
                    denom *= xi - xk;
                }
            }
            let step = poly_eval(&monic, xi) / denom;
            roots[i] = xi - step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..5 {
            let d = poly_deriv_eval(&monic, *r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= poly_eval(&monic, *r) / d;
        }
    }
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn d(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    pub fn bands(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 3,
        }
    }
}

/// One octave of detail coefficients. Grids are row-major; 1D uses `rows == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Octave {
    pub rows: usize,
    pub cols: usize,
    pub bands: Vec<Vec<f64>>,
    pub valid: Vec<bool>,
}

impl Octave {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Largest magnitude over all bands at a position.
    pub fn max_abs_at(&self, idx: usize) -> f64 {
        self.bands.iter().fold(0.0f64, |m, b| m.max(b[idx].abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    L1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPyramid {
    pub dim: Dim,
    /// Samples used (1D) or side length (2D).
    pub sample_count: usize,
    /// `octaves[0]` is octave `j = 1`.
    pub octaves: Vec<Octave>,
    /// Coarsest approximation, L²-normalized (row-major in 2D).
    pub approx: Vec<f64>,
    pub filter: Option<WaveletFilter>,
    pub normalization: Normalization,
}

impl CoefficientPyramid {
    /// Builds a fully valid 1D pyramid from per-octave L¹ coefficient arrays,
    /// finest first. Each octave must be exactly half the length of the previous.
    pub fn from_octaves_1d(octaves: Vec<Vec<f64>>) -> Result<Self> {
        let octs = octaves
            .into_iter()
            .map(|c| Octave {
                rows: 1,
                cols: c.len(),
                valid: vec![true; c.len()],
                bands: vec![c],
            })
            .collect();
        Self::from_parts(Dim::One, octs)
    }

    /// Builds a 2D pyramid from per-octave `(side, [band1, band2, band3])`, finest first.
    pub fn from_octaves_2d(octaves: Vec<(usize, [Vec<f64>; 3])>) -> Result<Self> {
        let octs = octaves
            .into_iter()
            .map(|(side, bands)| Octave {
                rows: side,
                cols: side,
                valid: vec![true; side * side],
                bands: bands.into(),
            })
            .collect();
        Self::from_parts(Dim::Two, octs)
    }

    /// Assembles a pyramid from octaves, checking dyadic consistency.
    pub fn from_parts(dim: Dim, octaves: Vec<Octave>) -> Result<Self> {
        if octaves.is_empty() {
            return Err(Error::InvalidInput("pyramid has no octaves".into()));
        }
        for (i, o) in octaves.iter().enumerate() {
            if o.bands.len() != dim.bands() {
                return Err(Error::InvalidInput(format!(
                    "octave {} has {} bands, expected {}",
                    i + 1,
                    o.bands.len(),
                    dim.bands()
                )));
            }
            if o.bands.iter().any(|b| b.len() != o.len()) || o.valid.len() != o.len() {
                return Err(Error::InvalidInput(format!(
                    "octave {} has inconsistent array sizes",
                    i + 1
                )));
            }
            if dim == Dim::One && o.rows != 1 {
                return Err(Error::InvalidInput("1D octaves must have one row".into()));
            }
            if i > 0 {
                let prev = &octaves[i - 1];
                let ok = match dim {
                    Dim::One => prev.cols == 2 * o.cols,
                    Dim::Two => prev.cols == 2 * o.cols && prev.rows == 2 * o.rows,
                };
                if !ok {
                    return Err(Error::InvalidInput(format!(
                        "octave {} is not half the size of octave {}",
                        i + 1,
                        i
                    )));
                }
            }
            if o.bands.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "octave {} has non-finite coefficients",
                    i + 1
                )));
            }
        }
        let sample_count = match dim {
            Dim::One => octaves[0].cols * 2,
            Dim::Two => octaves[0].cols * 2,
        };
        Ok(CoefficientPyramid {
            dim,
            sample_count,
            octaves,
            approx: Vec::new(),
            filter: None,
            normalization: Normalization::L1,
        })
    }

    pub fn num_octaves(&self) -> usize {
        self.octaves.len()
    }

    /// Octave by 1-based index.
    pub fn octave(&self, j: usize) -> &Octave {
        &self.octaves[j - 1]
    }

    pub fn octave_mut(&mut self, j: usize) -> &mut Octave {
        &mut self.octaves[j - 1]
    }

    /// Valid coefficient counts per octave, `n_j`.
    pub fn valid_counts(&self) -> Vec<usize> {
        self.octaves.iter().map(Octave::n_valid).collect()
    }

    /// Factor turning an L¹ coefficient at octave `j` into the L² one.
    pub fn l2_factor(&self, j: usize) -> f64 {
        2f64.powf(j as f64 * self.dim.d() as f64 / 2.0)
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// Number of octaves permitted by length and filter: `floor(log2 n) - ceil(log2 F)`.
pub fn max_octaves_for(n: usize, filter_len: usize) -> usize {
    let log_n = usize::BITS - 1 - n.leading_zeros();
    let log_f = filter_len.next_power_of_two().trailing_zeros();
    (log_n as usize).saturating_sub(log_f as usize)
}

/// One periodic analysis step. Returns (approx, detail, validity of outputs).
fn analysis_step(
    input: &[f64],
    valid: &[bool],
    lo: &[f64],
    hi: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let n = input.len();
    let half = n / 2;
    let f = lo.len();
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    let mut out_valid = vec![false; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        let mut ok = 2 * k + f <= n;
        for m in 0..f {
            let idx = (2 * k + m) % n;
            a += lo[m] * input[idx];
            d += hi[m] * input[idx];
            ok &= valid[idx];
        }
        approx[k] = a;
        detail[k] = d;
        out_valid[k] = ok;
    }
    (approx, detail, out_valid)
}

fn synthesis_step(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = approx.len() * 2;
    let mut out = vec![0.0; n];
    for k in 0..approx.len() {
        for m in 0..lo.len() {
            let idx = (2 * k + m) % n;
            out[idx] += lo[m] * approx[k] + hi[m] * detail[k];
        }
    }
    out
}

/// 1D periodic DWT with L¹-normalized details.
///
/// The signal is truncated to the largest multiple of `2^J`; octaves whose
/// valid count falls below [`MIN_VALID_COARSEST`] are dropped from the top.
pub fn dwt1d(
    signal: &[f64],
    filter: &WaveletFilter,
    max_octaves: Option<usize>,
) -> Result<CoefficientPyramid> {
    let f = filter.len();
    if signal.len() < 2 * f {
        return Err(Error::InsufficientData(format!(
            "signal of length {} is shorter than twice the filter length {}",
            signal.len(),
            f
        )));
    }
    check_finite(signal)?;
    let mut levels = max_octaves_for(signal.len(), f);
    if let Some(m) = max_octaves {
        levels = levels.min(m);
    }
    if levels == 0 {
        return Err(Error::InsufficientData(format!(
            "signal of length {} supports no octave",
            signal.len()
        )));
    }
    let used = (signal.len() >> levels) << levels;
    let lo = &filter.lowpass;
    let hi = filter.highpass();

    let mut current = signal[..used].to_vec();
    let mut valid = vec![true; used];
    let mut octaves = Vec::with_capacity(levels);
    let mut approxes = Vec::with_capacity(levels);
    for j in 1..=levels {
        let (a, d, v) = analysis_step(&current, &valid, lo, &hi);
        let scale = 2f64.powf(-(j as f64) / 2.0);
        octaves.push(Octave {
            rows: 1,
            cols: d.len(),
            bands: vec![d.into_iter().map(|c| c * scale).collect()],
            valid: v.clone(),
        });
        approxes.push(a.clone());
        current = a;
        valid = v;
    }
    while octaves
        .last()
        .is_some_and(|o| o.n_valid() < MIN_VALID_COARSEST)
    {
        octaves.pop();
        approxes.pop();
    }
    let approx = approxes.pop().ok_or_else(|| {
        Error::InsufficientData(format!(
            "signal of length {} leaves no octave with {} valid coefficients",
            signal.len(),
            MIN_VALID_COARSEST
        ))
    })?;
    Ok(CoefficientPyramid {
        dim: Dim::One,
        sample_count: used,
        octaves,
        approx,
        filter: Some(filter.clone()),
        normalization: Normalization::L1,
    })
}

/// Inverse of [`dwt1d`] given the coarsest approximation.
pub fn idwt1d(pyramid: &CoefficientPyramid, approx: &[f64]) -> Result<Vec<f64>> {
    if pyramid.dim != Dim::One {
        return Err(Error::InvalidInput("idwt1d needs a 1D pyramid".into()));
    }
    let filter = pyramid
        .filter
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("pyramid carries no synthesis filter".into()))?;
    let coarsest = pyramid
        .octaves
        .last()
        .ok_or_else(|| Error::InvalidInput("pyramid has no octaves".into()))?;
    if approx.len() != coarsest.cols {
        return Err(Error::InvalidInput(format!(
            "approximation length {} does not match coarsest octave length {}",
            approx.len(),
            coarsest.cols
        )));
    }
    let hi = filter.highpass();
    let mut current = approx.to_vec();
    for j in (1..=pyramid.num_octaves()).rev() {
        let oct = pyramid.octave(j);
        if oct.cols != current.len() {
            return Err(Error::InvalidInput(format!("octave {j} has inconsistent length")));
        }
        let factor = pyramid.l2_factor(j);
        let detail: Vec<f64> = oct.bands[0].iter().map(|c| c * factor).collect();
        current = synthesis_step(&current, &detail, &filter.lowpass, &hi);
    }
    Ok(current)
}

fn transpose(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Applies `step` to every row of a row-major `side x side` grid, returning
/// the (low, high) halves as `side x side/2` grids.
fn rows_analysis(
    data: &[f64],
    side: usize,
    axis_valid: &[bool],
    lo: &[f64],
    hi: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let half = side / 2;
    let mut low = Vec::with_capacity(side * half);
    let mut high = Vec::with_capacity(side * half);
    let mut out_valid = Vec::new();
    for r in 0..side {
        let (a, d, v) = analysis_step(&data[r * side..(r + 1) * side], axis_valid, lo, hi);
        low.extend(a);
        high.extend(d);
        out_valid = v;
    }
    (low, high, out_valid)
}

/// Analyzes the columns of a `side x half` grid: returns (low, high) as `half x half`.
fn cols_analysis(
    data: &[f64],
    side: usize,
    half: usize,
    axis_valid: &[bool],
    lo: &[f64],
    hi: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let t = transpose(data, side, half); // half x side
    let mut low_t = Vec::with_capacity(half * half);
    let mut high_t = Vec::with_capacity(half * half);
    for r in 0..half {
        let (a, d, _) = analysis_step(&t[r * side..(r + 1) * side], axis_valid, lo, hi);
        low_t.extend(a);
        high_t.extend(d);
    }
    (transpose(&low_t, half, half), transpose(&high_t, half, half))
}

/// 2D separable periodic DWT of a square field with side a power of two.
///
/// Bands per octave are ordered (row-detail/col-approx, row-approx/col-detail,
/// diagonal). Coefficients are divided by `2^j` for the 2D L¹ convention.
pub fn dwt2d(
    field: &[f64],
    side: usize,
    filter: &WaveletFilter,
    max_octaves: Option<usize>,
) -> Result<CoefficientPyramid> {
    if field.len() != side * side {
        return Err(Error::InvalidInput(format!(
            "field of {} values is not a square of side {}",
            field.len(),
            side
        )));
    }
    if !side.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "side {side} is not a power of two"
        )));
    }
    let f = filter.len();
    if side < 4 * f {
        return Err(Error::InsufficientData(format!(
            "side {} is smaller than four filter lengths ({})",
            side,
            4 * f
        )));
    }
    check_finite(field)?;
    let mut levels = max_octaves_for(side, f);
    if let Some(m) = max_octaves {
        levels = levels.min(m);
    }
    let lo = &filter.lowpass;
    let hi = filter.highpass();

    let mut current = field.to_vec();
    let mut cur_side = side;
    let mut axis_valid = vec![true; side];
    let mut octaves = Vec::with_capacity(levels);
    let mut approxes = Vec::with_capacity(levels);
    for j in 1..=levels {
        let half = cur_side / 2;
        let (low, high, v) = rows_analysis(&current, cur_side, &axis_valid, lo, &hi);
        let (ll, lh) = cols_analysis(&low, cur_side, half, &axis_valid, lo, &hi);
        let (hl, hh) = cols_analysis(&high, cur_side, half, &axis_valid, lo, &hi);
        let scale = 2f64.powi(-(j as i32));
        let mut valid = vec![false; half * half];
        for r in 0..half {
            for c in 0..half {
                valid[r * half + c] = v[r] && v[c];
            }
        }
        // hl: detail along rows (x), approx along columns (y)
        let bands = [hl, lh, hh]
            .into_iter()
            .map(|b| b.into_iter().map(|x| x * scale).collect())
            .collect();
        octaves.push(Octave {
            rows: half,
            cols: half,
            bands,
            valid,
        });
        approxes.push(ll.clone());
        current = ll;
        cur_side = half;
        axis_valid = v;
    }
    while octaves
        .last()
        .is_some_and(|o| o.n_valid() < MIN_VALID_COARSEST)
    {
        octaves.pop();
        approxes.pop();
    }
    let approx = approxes.pop().ok_or_else(|| {
        Error::InsufficientData(format!("side {side} leaves no usable octave"))
    })?;
    Ok(CoefficientPyramid {
        dim: Dim::Two,
        sample_count: side,
        octaves,
        approx,
        filter: Some(filter.clone()),
        normalization: Normalization::L1,
    })
}

/// Inverse of [`dwt2d`].
pub fn idwt2d(pyramid: &CoefficientPyramid, approx: &[f64]) -> Result<Vec<f64>> {
    if pyramid.dim != Dim::Two {
        return Err(Error::InvalidInput("idwt2d needs a 2D pyramid".into()));
    }
    let filter = pyramid
        .filter
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("pyramid carries no synthesis filter".into()))?;
    let coarsest = pyramid
        .octaves
        .last()
        .ok_or_else(|| Error::InvalidInput("pyramid has no octaves".into()))?;
    if approx.len() != coarsest.len() {
        return Err(Error::InvalidInput(format!(
            "approximation size {} does not match coarsest octave size {}",
            approx.len(),
            coarsest.len()
        )));
    }
    let lo = &filter.lowpass;
    let hi = filter.highpass();
    let mut current = approx.to_vec();
    for j in (1..=pyramid.num_octaves()).rev() {
        let oct = pyramid.octave(j);
        let half = oct.rows;
        let side = half * 2;
        let factor = pyramid.l2_factor(j);
        let band = |b: usize| -> Vec<f64> { oct.bands[b].iter().map(|c| c * factor).collect() };
        let (hl, lh, hh) = (band(0), band(1), band(2));
        // columns first: rebuild low (from ll, lh) and high (from hl, hh), each side x half
        let synth_cols = |a: &[f64], d: &[f64]| -> Vec<f64> {
            let at = transpose(a, half, half);
            let dt = transpose(d, half, half);
            let mut out_t = Vec::with_capacity(side * half);
            for r in 0..half {
                out_t.extend(synthesis_step(
                    &at[r * half..(r + 1) * half],
                    &dt[r * half..(r + 1) * half],
                    lo,
                    &hi,
                ));
            }
            transpose(&out_t, half, side)
        };
        let low = synth_cols(&current, &lh);
        let high = synth_cols(&hl, &hh);
        let mut out = Vec::with_capacity(side * side);
        for r in 0..side {
            out.extend(synthesis_step(
                &low[r * half..(r + 1) * half],
                &high[r * half..(r + 1) * half],
                lo,
                &hi,
            ));
        }
        current = out;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_noise(n: usize, mut state: u64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn haar_taps() {
        let f = daubechies_filter(1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(f.len(), 2);
        assert!((f.lowpass[0] - s).abs() < 1e-15);
        assert!((f.lowpass[1] - s).abs() < 1e-15);
    }

    #[test]
    fn db2_closed_form() {
        let f = daubechies_filter(2).unwrap();
        let r3 = 3f64.sqrt();
        let den = 4.0 * std::f64::consts::SQRT_2;
        let expected = [(1.0 + r3) / den, (3.0 + r3) / den, (3.0 - r3) / den, (1.0 - r3) / den];
        for (a, b) in f.lowpass.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn db4_matches_published_taps() {
        let published = [
            0.230_377_813_308_855_2,
            0.714_846_570_552_541_5,
            0.630_880_767_929_590_4,
            -0.027_983_769_416_983_85,
            -0.187_034_811_718_881_1,
            0.030_841_381_835_986_97,
            0.032_883_011_666_982_95,
            -0.010_597_401_784_997_28,
        ];
        let f = daubechies_filter(4).unwrap();
        for (a, b) in f.lowpass.iter().zip(published) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn filters_are_orthonormal_with_vanishing_moments() {
        for n in 1..=10 {
            let f = daubechies_filter(n).unwrap();
            assert_eq!(f.len(), 2 * n);
            let energy: f64 = f.lowpass.iter().map(|g| g * g).sum();
            assert!((energy - 1.0).abs() < 1e-12, "db{n} energy {energy}");
            for shift in 1..n {
                let dot: f64 = (0..2 * n - 2 * shift)
                    .map(|m| f.lowpass[m] * f.lowpass[m + 2 * shift])
                    .sum();
                assert!(dot.abs() < 1e-10, "db{n} shift {shift}: {dot}");
            }
            let hi = f.highpass();
            for m in 0..n {
                let moment: f64 = hi
                    .iter()
                    .enumerate()
                    .map(|(k, h)| h * (k as f64).powi(m as i32))
                    .sum();
                let scale = (2.0 * n as f64).powi(m as i32);
                assert!(moment.abs() / scale < 1e-8, "db{n} moment {m}: {moment}");
            }
        }
    }

    #[test]
    fn unsupported_filters() {
        assert!(matches!(daubechies_filter(0), Err(Error::UnsupportedFilter(0))));
        assert!(matches!(daubechies_filter(11), Err(Error::UnsupportedFilter(11))));
    }

    #[test]
    fn constant_signal_has_zero_details() {
        for n in 1..=6 {
            let f = daubechies_filter(n).unwrap();
            let pyr = dwt1d(&vec![3.25; 4096], &f, None).unwrap();
            for o in &pyr.octaves {
                assert!(o.bands[0].iter().all(|c| c.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn ramp_is_annihilated_by_db2() {
        let f = daubechies_filter(2).unwrap();
        let x: Vec<f64> = (0..2048).map(|i| 0.5 + 0.01 * i as f64).collect();
        let pyr = dwt1d(&x, &f, None).unwrap();
        for o in &pyr.octaves {
            for (c, &v) in o.bands[0].iter().zip(&o.valid) {
                if v {
                    assert!(c.abs() < 1e-10, "{c}");
                }
            }
        }
    }

    #[test]
    fn matches_direct_convolution_oracle() {
        // Build each octave's detail straight from the equivalent filter:
        // iterated lowpass upsampled, then highpass, decimated by 2^j.
        let f = daubechies_filter(3).unwrap();
        let x = lcg_noise(1024, 7);
        let pyr = dwt1d(&x, &f, None).unwrap();
        let hi = f.highpass();
        let n = x.len();
        let mut equivalent_lo = vec![1.0];
        for j in 1..=pyr.num_octaves() {
            let up = 1usize << (j - 1);
            let mut detail_filter = vec![0.0; equivalent_lo.len() + up * (hi.len() - 1)];
            for (a, &e) in equivalent_lo.iter().enumerate() {
                for (m, &h) in hi.iter().enumerate() {
                    detail_filter[a + up * m] += e * h;
                }
            }
            let oct = pyr.octave(j);
            for k in 0..oct.cols {
                let direct: f64 = detail_filter
                    .iter()
                    .enumerate()
                    .map(|(t, w)| w * x[((k << j) + t) % n])
                    .sum::<f64>()
                    * 2f64.powf(-(j as f64) / 2.0);
                assert!((direct - oct.bands[0][k]).abs() < 1e-10);
            }
            let mut next = vec![0.0; equivalent_lo.len() + up * (f.len() - 1)];
            for (a, &e) in equivalent_lo.iter().enumerate() {
                for (m, &g) in f.lowpass.iter().enumerate() {
                    next[a + up * m] += e * g;
                }
            }
            equivalent_lo = next;
        }
    }

    #[test]
    fn octave_count_and_masks() {
        let f = daubechies_filter(2).unwrap();
        let pyr = dwt1d(&lcg_noise(1 << 16, 3), &f, None).unwrap();
        // 16 - 2 = 14 levels allowed, coarsest kept must have >= 8 valid
        assert_eq!(pyr.num_octaves(), 12);
        assert_eq!(pyr.octave(1).cols, 1 << 15);
        for o in &pyr.octaves {
            let invalid = o.len() - o.n_valid();
            assert!((1..=3).contains(&invalid), "{invalid}");
            // masks only at the right edge
            assert!(o.valid[..o.n_valid()].iter().all(|&v| v));
        }
    }

    #[test]
    fn short_and_bad_input() {
        let f = daubechies_filter(2).unwrap();
        assert!(matches!(dwt1d(&[1.0; 7], &f, None), Err(Error::InsufficientData(_))));
        let mut x = vec![0.0; 256];
        x[10] = f64::NAN;
        assert!(matches!(dwt1d(&x, &f, None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn round_trip_white_noise() {
        for n in [1usize, 2, 4, 7] {
            let f = daubechies_filter(n).unwrap();
            let x = lcg_noise(4096, 11);
            let pyr = dwt1d(&x, &f, None).unwrap();
            let y = idwt1d(&pyr, &pyr.approx).unwrap();
            let err = x.iter().zip(&y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-9, "db{n}: {err}");
        }
    }

    #[test]
    fn zero_pyramid_reconstructs_zero() {
        let f = daubechies_filter(2).unwrap();
        let mut pyr = dwt1d(&lcg_noise(512, 5), &f, None).unwrap();
        for o in pyr.octaves.iter_mut() {
            o.bands[0].iter_mut().for_each(|c| *c = 0.0);
        }
        let approx = vec![0.0; pyr.approx.len()];
        let y = idwt1d(&pyr, &approx).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        assert!(idwt1d(&pyr, &[0.0; 3]).is_err());
    }

    #[test]
    fn unit_coefficient_gives_wavelet_atom() {
        let f = daubechies_filter(2).unwrap();
        let mut pyr = dwt1d(&vec![0.0; 1024], &f, None).unwrap();
        let j = 3;
        let k = 5;
        pyr.octave_mut(j).bands[0][k] = 1.0;
        let approx = vec![0.0; pyr.approx.len()];
        let y = idwt1d(&pyr, &approx).unwrap();
        // atom: highpass upsampled at level j then lowpass cascade, L2 factor 2^{j/2}
        let hi = f.highpass();
        let mut atom = hi.clone();
        for level in (1..j).rev() {
            let _ = level;
            let mut up = vec![0.0; 2 * atom.len() + f.len()];
            for (a, &v) in atom.iter().enumerate() {
                for (m, &g) in f.lowpass.iter().enumerate() {
                    up[2 * a + m] += v * g;
                }
            }
            atom = up;
        }
        let start = k << j;
        let scale = 2f64.powf(j as f64 / 2.0);
        for (t, &v) in y.iter().enumerate() {
            let expected = if t >= start && t - start < atom.len() {
                atom[t - start] * scale
            } else {
                0.0
            };
            assert!((v - expected).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn l1_coefficients_are_dilation_invariant() {
        let f = daubechies_filter(2).unwrap();
        let x = lcg_noise(2048, 19);
        // y(t) = x(t/2): one lowpass synthesis step with approximation √2·x
        let hi = f.highpass();
        let scaled: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
        let y = synthesis_step(&scaled, &vec![0.0; x.len()], &f.lowpass, &hi);
        let px = dwt1d(&x, &f, Some(6)).unwrap();
        let py = dwt1d(&y, &f, Some(7)).unwrap();
        for j in 1..=6 {
            let ox = px.octave(j);
            let oy = py.octave(j + 1);
            for k in 0..ox.cols {
                if ox.valid[k] && oy.valid[k] {
                    assert!((ox.bands[0][k] - oy.bands[0][k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dwt2d_constant_and_shape_errors() {
        let f = daubechies_filter(2).unwrap();
        let pyr = dwt2d(&vec![1.5; 64 * 64], 64, &f, None).unwrap();
        for o in &pyr.octaves {
            assert!(o.bands.iter().flatten().all(|c| c.abs() < 1e-12));
        }
        assert!(matches!(dwt2d(&vec![0.0; 64 * 32], 64, &f, None), Err(Error::InvalidInput(_))));
        assert!(matches!(dwt2d(&vec![0.0; 48 * 48], 48, &f, None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn dwt2d_separable_product() {
        let f = daubechies_filter(2).unwrap();
        let side = 128;
        let s = lcg_noise(side, 23);
        let field: Vec<f64> = (0..side * side).map(|i| s[i / side] * s[i % side]).collect();
        let pyr = dwt2d(&field, side, &f, Some(3)).unwrap();
        // 1D route: per-level approx (a) and detail (d) of s, L2-normalized
        let hi = f.highpass();
        let mut a = s.clone();
        let mut valid = vec![true; side];
        for j in 1..=3 {
            let (na, nd, nv) = analysis_step(&a, &valid, &f.lowpass, &hi);
            let o = pyr.octave(j);
            let half = o.rows;
            let l1 = 2f64.powi(-(j as i32));
            for r in 0..half {
                for c in 0..half {
                    let idx = r * half + c;
                    // band 0: detail along columns index (x), approx along rows (y)
                    assert!((o.bands[0][idx] - na[r] * nd[c] * l1).abs() < 1e-12);
                    assert!((o.bands[1][idx] - nd[r] * na[c] * l1).abs() < 1e-12);
                    assert!((o.bands[2][idx] - nd[r] * nd[c] * l1).abs() < 1e-12);
                }
            }
            a = na;
            valid = nv;
        }
    }

    #[test]
    fn dwt2d_round_trip() {
        let f = daubechies_filter(3).unwrap();
        let side = 256;
        let x = lcg_noise(side * side, 31);
        let pyr = dwt2d(&x, side, &f, None).unwrap();
        let y = idwt2d(&pyr, &pyr.approx).unwrap();
        let err = x.iter().zip(&y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9, "{err}");
    }
}
