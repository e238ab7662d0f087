//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use pleaders::dwt::{CoefficientPyramid, Dim};
use pleaders::PValue;
use rand::Rng;

/// Random pyramid with `levels` octaves whose finest octave has `2^levels`
/// cells per axis. Each coefficient is invalid with probability `p_invalid`.
pub fn random_pyramid<R: Rng>(rng: &mut R, dim: Dim, levels: usize, p_invalid: f64) -> CoefficientPyramid {
    let finest = 1usize << levels;
    let mut pyr = match dim {
        Dim::One => CoefficientPyramid::from_octaves_1d(
            (0..levels)
                .map(|j| (0..finest >> j).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect(),
        ),
        Dim::Two => CoefficientPyramid::from_octaves_2d(
            (0..levels)
                .map(|j| {
                    let side = finest >> j;
                    let band = |rng: &mut R| (0..side * side).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
                    (side, [band(rng), band(rng), band(rng)])
                })
                .collect(),
        ),
    }
    .expect("consistent pyramid");
    for oct in &mut pyr.octaves {
        for v in &mut oct.valid {
            *v = !rng.gen_bool(p_invalid);
        }
    }
    pyr
}

/// p-leaders straight from the definition: every coefficient of octave
/// `j' <= j` whose ancestor at octave `j` lies in the neighbourhood enters with
/// weight `2^{-d(j-j')}`. Leaders whose neighbourhood leaves the grid, or that
/// touch an invalid coefficient, are invalid. Returns `(values, valid)` per octave.
pub fn brute_force_leaders(pyr: &CoefficientPyramid, p: PValue, full: bool) -> Vec<(Vec<f64>, Vec<bool>)> {
    let d = pyr.dim.d() as i32;
    let two_d = pyr.dim == Dim::Two;
    let mut out = Vec::new();
    for j in 1..=pyr.num_octaves() {
        let top = pyr.octave(j);
        let (rows, cols) = (top.rows as i64, top.cols as i64);
        let mut values = vec![0.0; top.len()];
        let mut valid = vec![true; top.len()];
        for r in 0..rows {
            for c in 0..cols {
                let pos = (r * cols + c) as usize;
                let reach = if full { 1 } else { 0 };
                let row_reach = if two_d { reach } else { 0 };
                let mut acc = 0.0f64;
                let mut ok = true;
                for nr in r - row_reach..=r + row_reach {
                    for nc in c - reach..=c + reach {
                        if nr < 0 || nc < 0 || nr >= rows || nc >= cols {
                            ok = false;
                            continue;
                        }
                        for jf in 1..=j {
                            let fine = pyr.octave(jf);
                            let span = 1i64 << (j - jf);
                            let row_span = if two_d { span } else { 1 };
                            for fr in nr * row_span..(nr + 1) * row_span {
                                for fc in nc * span..(nc + 1) * span {
                                    let idx = (fr * fine.cols as i64 + fc) as usize;
                                    ok &= fine.valid[idx];
                                    for band in &fine.bands {
                                        let a = band[idx].abs();
                                        acc = match p {
                                            PValue::Finite(pv) => {
                                                acc + 2f64.powi(-d * (j - jf) as i32) * a.powf(pv)
                                            }
                                            PValue::Infinite => acc.max(a),
                                        };
                                    }
                                }
                            }
                        }
                    }
                }
                values[pos] = match p {
                    PValue::Finite(pv) => acc.powf(1.0 / pv),
                    PValue::Infinite => acc,
                };
                valid[pos] = ok;
            }
        }
        out.push((values, valid));
    }
    out
}

/// Largest relative gap between two leader sets, over positions valid in both.
pub fn max_rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}
