//! Small numerical helpers shared by the estimators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A p parameter: a positive real or infinity (wavelet leaders).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValue {
    Finite(f64),
    Infinite,
}

impl PValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            PValue::Finite(p) => Some(p),
            PValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, PValue::Infinite)
    }

    /// `1/p`, zero for infinity.
    pub fn recip(self) -> f64 {
        match self {
            PValue::Finite(p) => 1.0 / p,
            PValue::Infinite => 0.0,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            PValue::Finite(p) => p,
            PValue::Infinite => f64::INFINITY,
        }
    }
}

impl From<f64> for PValue {
    fn from(p: f64) -> Self {
        if p.is_infinite() && p > 0.0 {
            PValue::Infinite
        } else {
            PValue::Finite(p)
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PValue::Finite(p) => write!(f, "{p}"),
            PValue::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for PValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if matches!(t, "inf" | "Inf" | "infinity" | "+inf") {
            return Ok(PValue::Infinite);
        }
        let p: f64 = if let Some((a, b)) = t.split_once('/') {
            let num: f64 = a.trim().parse().map_err(|_| format!("bad p value {s:?}"))?;
            let den: f64 = b.trim().parse().map_err(|_| format!("bad p value {s:?}"))?;
            num / den
        } else {
            t.parse().map_err(|_| format!("bad p value {s:?}"))?
        };
        if !(p > 0.0) {
            return Err(format!("p must be positive, got {s:?}"));
        }
        Ok(PValue::from(p))
    }
}

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PValue::Finite(p) => s.serialize_f64(*p),
            PValue::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(PValue::from(p)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `log2((1/n) Σ x^q)` for non-negative samples, computed in the log domain.
///
/// Returns `None` when a zero sample meets `q <= 0` (other than `q == 0`
/// exactly, which is always 0) or when all samples are zero with `q > 0`.
pub fn log2_mean_pow(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    if q == 0.0 {
        return Some(0.0);
    }
    let mut max_log = f64::NEG_INFINITY;
    for &v in values {
        if v == 0.0 {
            if q < 0.0 {
                return None;
            }
            continue;
        }
        max_log = max_log.max(q * v.ln());
    }
    if max_log == f64::NEG_INFINITY {
        return None;
    }
    let sum: f64 = values
        .iter()
        .filter(|&&v| v != 0.0)
        .map(|&v| (q * v.ln() - max_log).exp())
        .sum();
    Some((max_log + sum.ln() - (values.len() as f64).ln()) / std::f64::consts::LN_2)
}

/// First four cumulants from biased central moments:
/// mean, variance, third central moment, fourth central moment − 3·variance².
pub fn cumulants4(values: &[f64]) -> [f64; 4] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    [mean, m2, m3, m4 - 3.0 * m2 * m2]
}

/// Largest amount by which an interior sample falls below the chord of its
/// two neighbours (zero for a concave sequence).
pub fn concavity_violation(x: &[f64], y: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 1..x.len().saturating_sub(1) {
        let t = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
        let chord = y[i - 1] + t * (y[i + 1] - y[i - 1]);
        worst = worst.max(chord - y[i]);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_values_parse_and_serialize() {
        assert_eq!("inf".parse::<PValue>().unwrap(), PValue::Infinite);
        assert_eq!("1/4".parse::<PValue>().unwrap(), PValue::Finite(0.25));
        assert_eq!("2".parse::<PValue>().unwrap(), PValue::Finite(2.0));
        assert!("0".parse::<PValue>().is_err());
        assert!("-1".parse::<PValue>().is_err());
        let json = serde_json::to_string(&vec![PValue::Finite(0.5), PValue::Infinite]).unwrap();
        assert_eq!(json, r#"[0.5,"inf"]"#);
        let back: Vec<PValue> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![PValue::Finite(0.5), PValue::Infinite]);
    }

    #[test]
    fn log_mean_pow_matches_direct() {
        let v = [0.5, 2.0, 3.0, 0.125];
        for q in [-3.0, -1.0, 0.5, 1.0, 4.0] {
            let direct = (v.iter().map(|x: &f64| x.powf(q)).sum::<f64>() / 4.0).log2();
            assert!((log2_mean_pow(&v, q).unwrap() - direct).abs() < 1e-13);
        }
        assert_eq!(log2_mean_pow(&v, 0.0), Some(0.0));
        assert_eq!(log2_mean_pow(&[0.0, 1.0], -1.0), None);
        assert!((log2_mean_pow(&[0.0, 1.0], 2.0).unwrap() - (0.5f64).log2()).abs() < 1e-15);
    }

    #[test]
    fn cumulants_of_two_point_set() {
        let (a, b) = (0.3, -1.1);
        let c = cumulants4(&[a, b, a, b]);
        assert!((c[0] - (a + b) / 2.0).abs() < 1e-15);
        assert!((c[1] - (a - b) * (a - b) / 4.0).abs() < 1e-15);
        assert!(c[2].abs() < 1e-15);
    }
}
