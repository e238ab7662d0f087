//! Monte Carlo experiments, rmse aggregation and single-file analysis.
//!
//! An experiment writes `config.json`, one CSV shard per realization under
//! `shards/`, `failures.csv`, `aggregate.csv` and long-format mean tables
//! (`zeta_mean.csv`, `spectrum_mean.csv`). Shards are the unit of resumption:
//! a rerun with the same configuration reloads every shard already on disk.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_leaders, LeaderAnalysis, LeaderConfig};
use crate::dwt::{daubechies_filter, dwt1d, dwt2d, CoefficientPyramid, WaveletFilter};
use crate::error::{Error, Result};
use crate::formalism::{default_q_grid, LegendreSpectrum, ScalingEstimates, Weighting};
use crate::io::{self, Signal};
use crate::leaders::{
    coefficient_weights, hmin_weighted, p0_hat, Neighborhood, WaveletScalingFunction, P0_GRID,
};
use crate::mfdfa::{dyadic_scales, fluctuations, mfdfa_analyze, MfdfaOptions};
use crate::stats::PValue;
use crate::synth::{
    add_trend, gen_cmc2d, gen_lws, gen_mrw, oracles, CmcParams, LwsParams, MrwParams, Trend,
};

/// Shortest series (or field side squared) accepted by [`analyze_signal`].
pub const MIN_SAMPLES: usize = 256;

/// Synthetic process and its parameters. The `seed` inside is replaced per realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "kebab-case")]
pub enum Process {
    Mrw(MrwParams),
    Lws(LwsParams),
    Cmc(CmcParams),
}

impl Process {
    pub fn seed(&self) -> u64 {
        match self {
            Process::Mrw(x) => x.seed,
            Process::Lws(x) => x.seed,
            Process::Cmc(x) => x.seed,
        }
    }

    fn with_seed(&self, seed: u64) -> Process {
        let mut p = self.clone();
        match &mut p {
            Process::Mrw(x) => x.seed = seed,
            Process::Lws(x) => x.seed = seed,
            Process::Cmc(x) => x.seed = seed,
        }
        p
    }

    pub fn generate(&self, filter: &WaveletFilter) -> Result<Signal> {
        match self {
            Process::Mrw(x) => gen_mrw(x).map(Signal::Series),
            Process::Lws(x) => gen_lws(x, filter).map(Signal::Series),
            Process::Cmc(x) => Ok(Signal::Field {
                side: x.side,
                values: gen_cmc2d(x)?,
            }),
        }
    }

    /// Known log-cumulants `c1..c4` for an estimator, `None` where no closed form applies.
    pub fn truth(&self, estimator: Estimator) -> [Option<f64>; 4] {
        match self {
            Process::Mrw(x) => {
                let (c1, c2) = oracles::mrw_cumulants(x);
                [Some(c1), Some(c2), Some(0.0), Some(0.0)]
            }
            Process::Cmc(x) => oracles::cmc_cumulants(x).map(Some),
            Process::Lws(x) => match estimator {
                // the spectrum is linear, so only its right endpoint (the mode) is pinned
                Estimator::Leader(p) => [
                    oracles::lws_oracle(x, p.as_f64()).ok().map(|s| s.right),
                    None,
                    None,
                    None,
                ],
                Estimator::Mfdfa => [None; 4],
            },
        }
    }

    /// Critical Lebesgue index, where a closed form exists.
    pub fn p0(&self) -> Option<PValue> {
        match self {
            Process::Mrw(x) => oracles::mrw_p0(x).ok().map(|v| {
                if v.is_infinite() {
                    PValue::Infinite
                } else {
                    PValue::Finite(v)
                }
            }),
            _ => None,
        }
    }
}

/// One estimator of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Leader(PValue),
    Mfdfa,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Leader(p) => write!(f, "p={p}"),
            Estimator::Mfdfa => write!(f, "mfdfa"),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("mfdfa") {
            return Ok(Estimator::Mfdfa);
        }
        let p = s.strip_prefix("p=").unwrap_or(s);
        p.parse::<PValue>()
            .map(Estimator::Leader)
            .map_err(|_| Error::InvalidParameter(format!("unknown estimator {s:?} (use p=<value>, p=inf or mfdfa)")))
    }
}

/// MFDFA settings used alongside the leader estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfdfaSpec {
    /// Detrending polynomial degree.
    pub degree: usize,
    /// First regression octave (scale `2^j1`); `None` reuses the leader `j1`.
    pub j1: Option<usize>,
    /// Last regression octave; `None` takes the largest admissible scale.
    pub j2: Option<usize>,
    pub both_ends: bool,
}

impl Default for MfdfaSpec {
    fn default() -> Self {
        MfdfaSpec {
            degree: 1,
            j1: None,
            j2: None,
            both_ends: false,
        }
    }
}

/// Regression used for `η̂(p)` when locating the critical index.
///
/// Defaults to every octave with equal weights: count weights put almost all
/// mass on the finest octaves, where large-p moments are dominated by a few
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct P0Config {
    pub j1: usize,
    pub j2: Option<usize>,
    pub weighting: Weighting,
    pub p_grid: Vec<f64>,
}

impl Default for P0Config {
    fn default() -> Self {
        P0Config {
            j1: 1,
            j2: None,
            weighting: Weighting::Uniform,
            p_grid: P0_GRID.to_vec(),
        }
    }
}

/// Estimator settings shared by experiments and file analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub p_list: Vec<PValue>,
    pub q_grid: Vec<f64>,
    pub j1: usize,
    pub j2: Option<usize>,
    /// Vanishing moments of the Daubechies analysis wavelet.
    pub vanishing_moments: usize,
    pub weighting: Weighting,
    pub corrected: bool,
    pub neighborhood: Neighborhood,
    pub m_max: usize,
    pub bound_tolerance: f64,
    /// MFDFA alongside the leaders (1D only); `None` disables it.
    pub mfdfa: Option<MfdfaSpec>,
    /// Critical-index estimation; `None` disables it.
    pub p0: Option<P0Config>,
}

pub fn default_p_list() -> Vec<PValue> {
    [0.25, 0.5, 1.0, 2.0, 4.0, 5.0, 8.0, 10.0]
        .into_iter()
        .map(PValue::Finite)
        .chain(std::iter::once(PValue::Infinite))
        .collect()
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        let leader = LeaderConfig::default();
        AnalysisOptions {
            p_list: default_p_list(),
            q_grid: default_q_grid(),
            j1: leader.j1,
            j2: None,
            vanishing_moments: 2,
            weighting: leader.weighting,
            corrected: leader.corrected,
            neighborhood: leader.neighborhood,
            m_max: leader.m_max,
            bound_tolerance: leader.bound_tolerance,
            mfdfa: Some(MfdfaSpec::default()),
            p0: Some(P0Config::default()),
        }
    }
}

impl AnalysisOptions {
    pub fn leader_config(&self) -> LeaderConfig {
        LeaderConfig {
            q_grid: self.q_grid.clone(),
            j1: self.j1,
            j2: self.j2,
            weighting: self.weighting,
            corrected: self.corrected,
            neighborhood: self.neighborhood,
            m_max: self.m_max,
            bound_tolerance: self.bound_tolerance,
        }
    }

    pub fn estimators(&self, dim_one: bool) -> Vec<Estimator> {
        let mut out: Vec<Estimator> = self.p_list.iter().map(|&p| Estimator::Leader(p)).collect();
        if dim_one && self.mfdfa.is_some() {
            out.push(Estimator::Mfdfa);
        }
        out
    }

    fn filter(&self) -> Result<WaveletFilter> {
        daubechies_filter(self.vanishing_moments)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub process: Process,
    /// Realization `i` uses the process seed plus `i`.
    pub realizations: usize,
    pub trend: Option<Trend>,
    pub analysis: AnalysisOptions,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            process: Process::Mrw(MrwParams::default()),
            realizations: 50,
            trend: None,
            analysis: AnalysisOptions::default(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn seed_for(&self, index: usize) -> u64 {
        self.process.seed().wrapping_add(index as u64)
    }

    fn check(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidParameter("at least one realization is needed".into()));
        }
        if self.analysis.p_list.is_empty() && self.analysis.mfdfa.is_none() {
            return Err(Error::InvalidParameter("no estimator configured".into()));
        }
        if self.trend.is_some() && matches!(self.process, Process::Cmc(_)) {
            return Err(Error::ParameterInconsistency("trends apply to 1D processes only".into()));
        }
        Ok(())
    }
}

/// Estimates of one estimator on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRecord {
    pub estimator: String,
    pub cumulants: Vec<f64>,
    pub zeta: Vec<f64>,
    pub h: Vec<f64>,
    pub l: Vec<f64>,
    pub mode: f64,
    pub eta_p: Option<f64>,
    pub correction_applied: bool,
}

impl EstimatorRecord {
    fn new(estimator: Estimator, est: &ScalingEstimates, spec: &LegendreSpectrum) -> Self {
        EstimatorRecord {
            estimator: estimator.to_string(),
            cumulants: est.cumulants.clone(),
            zeta: est.zeta.clone(),
            h: spec.h.clone(),
            l: spec.l.clone(),
            mode: spec.mode(),
            eta_p: est.eta_p,
            correction_applied: est.correction_applied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: usize,
    pub seed: u64,
    pub hmin: Option<f64>,
    pub p0_hat: Option<PValue>,
    pub estimates: Vec<EstimatorRecord>,
}

impl RealizationRecord {
    pub fn get(&self, estimator: &str) -> Option<&EstimatorRecord> {
        self.estimates.iter().find(|e| e.estimator == estimator)
    }
}

/// A step that failed on one realization; `estimator` is an estimator label,
/// `p0`, `hmin` or `synthesis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub seed: u64,
    pub estimator: String,
    pub error: String,
}

/// Monte Carlo summary of one estimator for one log-cumulant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub estimator: String,
    /// Cumulant order, 1..=4.
    pub order: usize,
    pub truth: f64,
    pub n: usize,
    pub failures: usize,
    pub mean: f64,
    /// Population standard deviation (divisor `n`).
    pub sd: f64,
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P0Summary {
    pub oracle: Option<PValue>,
    pub n: usize,
    /// Mean over realizations; infinite as soon as one estimate is.
    pub mean: PValue,
    pub infinite: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub config: ExperimentConfig,
    pub records: Vec<RealizationRecord>,
    pub failures: Vec<Failure>,
    pub aggregates: Vec<Aggregate>,
    pub p0: Option<P0Summary>,
}

impl ResultSet {
    pub fn aggregate(&self, estimator: &str, order: usize) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.estimator == estimator && a.order == order)
    }

    /// Per-realization values of cumulant `order` for `estimator`.
    pub fn cumulant_values(&self, estimator: &str, order: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.get(estimator))
            .filter_map(|e| e.cumulants.get(order - 1).copied())
            .collect()
    }

    pub fn values_of(&self, estimator: &str, f: impl Fn(&EstimatorRecord) -> f64) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.get(estimator)).map(f).collect()
    }
}

/// `sqrt(mean((x - truth)²))`.
pub fn rmse(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidInput("rmse of an empty list".into()));
    }
    let ms = estimates.iter().map(|x| (x - truth).powi(2)).sum::<f64>() / estimates.len() as f64;
    Ok(ms.sqrt())
}

fn aggregate_one(estimator: &str, order: usize, truth: f64, values: &[f64], failures: usize) -> Result<Aggregate> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(Aggregate {
        estimator: estimator.to_string(),
        order,
        truth,
        n: values.len(),
        failures,
        mean,
        sd: var.sqrt(),
        bias: mean - truth,
        rmse: rmse(values, truth)?,
    })
}

fn pyramid_of(signal: &Signal, filter: &WaveletFilter) -> Result<CoefficientPyramid> {
    match signal {
        Signal::Series(x) => dwt1d(x, filter, None),
        Signal::Field { side, values } => dwt2d(values, *side, filter, None),
    }
}

fn coarsest_octave(pyramid: &CoefficientPyramid) -> usize {
    pyramid.num_octaves()
}

fn estimate_hmin(pyramid: &CoefficientPyramid, opts: &AnalysisOptions) -> Result<f64> {
    let j2 = opts.j2.unwrap_or_else(|| coarsest_octave(pyramid));
    let w = coefficient_weights(pyramid, opts.j1, j2, opts.weighting)?;
    hmin_weighted(pyramid, &w)
}

/// `η̂` on the critical-index grid and the resulting `p̂0`.
pub fn estimate_p0(pyramid: &CoefficientPyramid, cfg: &P0Config) -> Result<(WaveletScalingFunction, PValue)> {
    let j2 = cfg.j2.unwrap_or_else(|| coarsest_octave(pyramid));
    let w = coefficient_weights(pyramid, cfg.j1, j2, cfg.weighting)?;
    let curve = WaveletScalingFunction::estimate(pyramid, &cfg.p_grid, &w)?;
    let p0 = p0_hat(&curve)?;
    Ok((curve, p0))
}

fn run_mfdfa(series: &[f64], opts: &AnalysisOptions, spec: &MfdfaSpec) -> Result<(ScalingEstimates, LegendreSpectrum)> {
    let scales = dyadic_scales(series.len(), spec.degree);
    let table = fluctuations(series, &scales, spec.degree, true, spec.both_ends)?;
    let top = scales
        .last()
        .map(|a| a.trailing_zeros() as usize)
        .ok_or_else(|| Error::InsufficientData(format!("no admissible MFDFA scale for n = {}", series.len())))?;
    let j1 = spec.j1.unwrap_or(opts.j1);
    let j2 = spec.j2.unwrap_or(top);
    let mopts = MfdfaOptions {
        q_grid: opts.q_grid.clone(),
        range: Some((j1, j2)),
        weighting: opts.weighting,
        m_max: opts.m_max,
    };
    mfdfa_analyze(&table, &mopts)
}

struct Outcome {
    record: RealizationRecord,
    failures: Vec<Failure>,
}

fn analyze_realization(config: &ExperimentConfig, index: usize, filter: &WaveletFilter) -> Outcome {
    let seed = config.seed_for(index);
    let mut record = RealizationRecord {
        index,
        seed,
        hmin: None,
        p0_hat: None,
        estimates: Vec::new(),
    };
    let mut failures = Vec::new();
    let mut fail = |label: &str, e: Error| {
        failures.push(Failure {
            index,
            seed,
            estimator: label.to_string(),
            error: e.to_string().replace([',', '\n'], ";"),
        })
    };
    let signal = match config.process.with_seed(seed).generate(filter) {
        Ok(Signal::Series(x)) => match &config.trend {
            Some(t) => Signal::Series(add_trend(&x, t)),
            None => Signal::Series(x),
        },
        Ok(s) => s,
        Err(e) => {
            fail("synthesis", e);
            return Outcome { record, failures };
        }
    };
    let opts = &config.analysis;
    let pyramid = match pyramid_of(&signal, filter) {
        Ok(p) => p,
        Err(e) => {
            fail("synthesis", e);
            return Outcome { record, failures };
        }
    };
    match estimate_hmin(&pyramid, opts) {
        Ok(h) => record.hmin = Some(h),
        Err(e) => fail("hmin", e),
    }
    if let Some(cfg) = &opts.p0 {
        match estimate_p0(&pyramid, cfg) {
            Ok((_, p0)) => record.p0_hat = Some(p0),
            Err(e) => fail("p0", e),
        }
    }
    let lcfg = opts.leader_config();
    for est in opts.estimators(matches!(signal, Signal::Series(_))) {
        let label = est.to_string();
        let result = match est {
            Estimator::Leader(p) => analyze_leaders(&pyramid, p, &lcfg).map(|a| (a.estimates, a.spectrum)),
            Estimator::Mfdfa => run_mfdfa(signal.values(), opts, opts.mfdfa.as_ref().expect("mfdfa configured")),
        };
        match result {
            Ok((e, s)) => record.estimates.push(EstimatorRecord::new(est, &e, &s)),
            Err(e) => fail(&label, e),
        }
    }
    Outcome { record, failures }
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

const SHARD_HEADER: &str = "estimator,quantity,key,value";

fn shard_text(outcome: &Outcome, q_grid: &[f64]) -> String {
    let r = &outcome.record;
    let mut out = format!("{SHARD_HEADER}\n");
    out.push_str(&format!(",seed,,{}\n", r.seed));
    if let Some(h) = r.hmin {
        out.push_str(&format!(",hmin,,{}\n", fmt_f64(h)));
    }
    if let Some(p0) = r.p0_hat {
        out.push_str(&format!(",p0,,{}\n", fmt_f64(p0.as_f64())));
    }
    for e in &r.estimates {
        let l = &e.estimator;
        for (m, c) in e.cumulants.iter().enumerate() {
            out.push_str(&format!("{l},c,{},{}\n", m + 1, fmt_f64(*c)));
        }
        for (name, vals) in [("zeta", &e.zeta), ("h", &e.h), ("L", &e.l)] {
            for (q, v) in q_grid.iter().zip(vals.iter()) {
                out.push_str(&format!("{l},{name},{},{}\n", fmt_f64(*q), fmt_f64(*v)));
            }
        }
        out.push_str(&format!("{l},mode,,{}\n", fmt_f64(e.mode)));
        if let Some(eta) = e.eta_p {
            out.push_str(&format!("{l},eta,,{}\n", fmt_f64(eta)));
        }
        out.push_str(&format!("{l},corrected,,{}\n", e.correction_applied as u8));
    }
    for f in &outcome.failures {
        out.push_str(&format!("{},error,,{}\n", f.estimator, f.error));
    }
    out
}

fn parse_shard(path: &Path, index: usize, text: &str) -> Result<Outcome> {
    let bad = |what: String| Error::format(path, what);
    let mut lines = text.lines();
    if lines.next() != Some(SHARD_HEADER) {
        return Err(bad("missing shard header".into()));
    }
    let mut seed = None;
    let mut hmin = None;
    let mut p0 = None;
    let mut estimates: Vec<EstimatorRecord> = Vec::new();
    let mut failures = Vec::new();
    for (n, line) in lines.enumerate() {
        let parts: Vec<&str> = line.splitn(4, ',').collect();
        if parts.len() != 4 {
            return Err(bad(format!("line {}: expected 4 fields", n + 2)));
        }
        let (label, quantity, value) = (parts[0], parts[1], parts[3]);
        let num = || parse_f64(value).ok_or_else(|| bad(format!("line {}: bad number {value:?}", n + 2)));
        if quantity == "error" {
            failures.push((label.to_string(), value.to_string()));
            continue;
        }
        if label.is_empty() {
            match quantity {
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad(format!("bad seed {value:?}")))?),
                "hmin" => hmin = Some(num()?),
                "p0" => {
                    let v = num()?;
                    p0 = Some(if v.is_infinite() { PValue::Infinite } else { PValue::Finite(v) });
                }
                other => return Err(bad(format!("unknown quantity {other:?}"))),
            }
            continue;
        }
        if estimates.last().map(|e| e.estimator.as_str()) != Some(label) {
            estimates.push(EstimatorRecord {
                estimator: label.to_string(),
                cumulants: vec![],
                zeta: vec![],
                h: vec![],
                l: vec![],
                mode: f64::NAN,
                eta_p: None,
                correction_applied: false,
            });
        }
        let e = estimates.last_mut().expect("just pushed");
        match quantity {
            "c" => e.cumulants.push(num()?),
            "zeta" => e.zeta.push(num()?),
            "h" => e.h.push(num()?),
            "L" => e.l.push(num()?),
            "mode" => e.mode = num()?,
            "eta" => e.eta_p = Some(num()?),
            "corrected" => e.correction_applied = value == "1",
            other => return Err(bad(format!("unknown quantity {other:?}"))),
        }
    }
    let seed = seed.ok_or_else(|| bad("shard without seed".into()))?;
    Ok(Outcome {
        record: RealizationRecord {
            index,
            seed,
            hmin,
            p0_hat: p0,
            estimates,
        },
        failures: failures
            .into_iter()
            .map(|(estimator, error)| Failure {
                index,
                seed,
                estimator,
                error,
            })
            .collect(),
    })
}

fn shard_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("shards").join(format!("r{index:06}.csv"))
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn prepare_output(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    let shards = dir.join("shards");
    fs::create_dir_all(&shards).map_err(|e| Error::io(&shards, e))?;
    let cpath = dir.join("config.json");
    if cpath.exists() {
        let old: ExperimentConfig = io::read_json_file(&cpath)?;
        let mut a = old;
        let mut b = config.clone();
        // only the realization count may grow on resume
        a.realizations = 0;
        a.output = None;
        b.realizations = 0;
        b.output = None;
        if a != b {
            return Err(Error::ParameterInconsistency(format!(
                "{} holds results of a different configuration",
                dir.display()
            )));
        }
    }
    io::write_json_file(&cpath, config)
}

/// Runs (or resumes) an experiment. Realizations are processed in parallel
/// on the current rayon pool and aggregated in index order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultSet> {
    config.check()?;
    let filter = config.analysis.filter()?;
    if let Some(dir) = &config.output {
        prepare_output(dir, config)?;
    }
    let outcomes: Vec<Result<Outcome>> = (0..config.realizations)
        .into_par_iter()
        .map(|i| {
            if let Some(dir) = &config.output {
                let path = shard_path(dir, i);
                if path.exists() {
                    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    return parse_shard(&path, i, &text);
                }
                let text = shard_text(&analyze_realization(config, i, &filter), &config.analysis.q_grid);
                write_atomic(&path, &text)?;
                return parse_shard(&path, i, &text);
            }
            Ok(analyze_realization(config, i, &filter))
        })
        .collect();
    let mut records = Vec::with_capacity(config.realizations);
    let mut failures = Vec::new();
    for o in outcomes {
        let o = o?;
        records.push(o.record);
        failures.extend(o.failures);
    }
    let result = summarize(config, records, failures)?;
    if let Some(dir) = &config.output {
        write_outputs(dir, &result)?;
    }
    Ok(result)
}

fn summarize(config: &ExperimentConfig, records: Vec<RealizationRecord>, failures: Vec<Failure>) -> Result<ResultSet> {
    let one_d = !matches!(config.process, Process::Cmc(_));
    let mut aggregates = Vec::new();
    for est in config.analysis.estimators(one_d) {
        let label = est.to_string();
        let failed = failures.iter().filter(|f| f.estimator == label).count();
        for (m, truth) in config.process.truth(est).iter().enumerate() {
            let Some(truth) = *truth else { continue };
            let values: Vec<f64> = records
                .iter()
                .filter_map(|r| r.get(&label))
                .filter_map(|e| e.cumulants.get(m).copied())
                .collect();
            if values.is_empty() {
                continue;
            }
            aggregates.push(aggregate_one(&label, m + 1, truth, &values, failed)?);
        }
    }
    let p0s: Vec<PValue> = records.iter().filter_map(|r| r.p0_hat).collect();
    let p0 = (!p0s.is_empty()).then(|| {
        let infinite = p0s.iter().filter(|p| p.is_infinite()).count();
        let mean = if infinite > 0 {
            PValue::Infinite
        } else {
            PValue::Finite(p0s.iter().map(|p| p.as_f64()).sum::<f64>() / p0s.len() as f64)
        };
        P0Summary {
            oracle: config.process.p0(),
            n: p0s.len(),
            mean,
            infinite,
        }
    });
    Ok(ResultSet {
        config: config.clone(),
        records,
        failures,
        aggregates,
        p0,
    })
}

fn write_outputs(dir: &Path, result: &ResultSet) -> Result<()> {
    let rows: Vec<Vec<String>> = result
        .aggregates
        .iter()
        .map(|a| {
            vec![
                a.estimator.clone(),
                format!("c{}", a.order),
                fmt_f64(a.truth),
                a.n.to_string(),
                a.failures.to_string(),
                fmt_f64(a.mean),
                fmt_f64(a.sd),
                fmt_f64(a.bias),
                fmt_f64(a.rmse),
            ]
        })
        .collect();
    io::write_csv(
        &dir.join("aggregate.csv"),
        &["estimator", "target", "truth", "n", "failures", "mean", "sd", "bias", "rmse"],
        &rows,
    )?;
    let frows: Vec<Vec<String>> = result
        .failures
        .iter()
        .map(|f| {
            vec![
                f.index.to_string(),
                f.seed.to_string(),
                f.estimator.clone(),
                f.error.clone(),
            ]
        })
        .collect();
    io::write_csv(&dir.join("failures.csv"), &["index", "seed", "estimator", "error"], &frows)?;

    // mean ζ(q) and mean spectrum per estimator, long format
    let q = &result.config.analysis.q_grid;
    let mut zrows = Vec::new();
    let mut srows = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for r in &result.records {
        for e in &r.estimates {
            if !labels.contains(&e.estimator) {
                labels.push(e.estimator.clone());
            }
        }
    }
    for label in &labels {
        let recs: Vec<&EstimatorRecord> = result.records.iter().filter_map(|r| r.get(label)).collect();
        let n = recs.len() as f64;
        for (i, qi) in q.iter().enumerate() {
            let mean = |f: &dyn Fn(&EstimatorRecord) -> Option<f64>| {
                recs.iter().filter_map(|e| f(e)).sum::<f64>() / n
            };
            let z = mean(&|e| e.zeta.get(i).copied());
            let h = mean(&|e| e.h.get(i).copied());
            let l = mean(&|e| e.l.get(i).copied());
            zrows.push(vec![label.clone(), fmt_f64(*qi), fmt_f64(z), recs.len().to_string()]);
            srows.push(vec![label.clone(), fmt_f64(*qi), fmt_f64(h), fmt_f64(l), recs.len().to_string()]);
        }
    }
    io::write_csv(&dir.join("zeta_mean.csv"), &["estimator", "q", "zeta", "n"], &zrows)?;
    io::write_csv(&dir.join("spectrum_mean.csv"), &["estimator", "q", "h", "L", "n"], &srows)?;
    let summary = serde_json::json!({
        "realizations": result.records.len(),
        "failures": result.failures.len(),
        "p0": result.p0,
    });
    io::write_json_file(&dir.join("summary.json"), &summary)
}

/// Paired comparison of two estimators on one log-cumulant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub order: usize,
    pub truth: f64,
    /// Realizations where both estimators succeeded.
    pub n: usize,
    pub rmse_a: f64,
    pub rmse_b: f64,
    /// `rmse_b / rmse_a`.
    pub ratio: f64,
}

/// rmse of two estimators over the realizations where both succeeded.
pub fn compare(result: &ResultSet, a: Estimator, b: Estimator) -> Result<Vec<PairedRow>> {
    let (la, lb) = (a.to_string(), b.to_string());
    let truth_a = result.config.process.truth(a);
    let truth_b = result.config.process.truth(b);
    let mut rows = Vec::new();
    for m in 0..4 {
        let (Some(ta), Some(tb)) = (truth_a[m], truth_b[m]) else { continue };
        let mut va = Vec::new();
        let mut vb = Vec::new();
        for r in &result.records {
            if let (Some(x), Some(y)) = (r.get(&la), r.get(&lb)) {
                if let (Some(&cx), Some(&cy)) = (x.cumulants.get(m), y.cumulants.get(m)) {
                    va.push(cx);
                    vb.push(cy);
                }
            }
        }
        if va.is_empty() {
            continue;
        }
        let (ra, rb) = (rmse(&va, ta)?, rmse(&vb, tb)?);
        rows.push(PairedRow {
            order: m + 1,
            truth: ta,
            n: va.len(),
            rmse_a: ra,
            rmse_b: rb,
            ratio: rb / ra,
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no realization holds both {la} and {lb} with a known truth"
        )));
    }
    Ok(rows)
}

/// Output of [`analyze_signal`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub dimension: usize,
    pub samples: usize,
    pub options: AnalysisOptions,
    pub hmin: f64,
    /// `(p, η̂(p))` on the critical-index grid.
    pub eta: Vec<(f64, f64)>,
    pub p0_hat: Option<PValue>,
    pub leaders: Vec<LeaderAnalysis>,
    pub mfdfa: Option<(ScalingEstimates, LegendreSpectrum)>,
    pub warnings: Vec<String>,
}

/// Full pipeline on one series or field.
pub fn analyze_signal(signal: &Signal, options: &AnalysisOptions) -> Result<AnalysisBundle> {
    let count = signal.len();
    if count < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{count} samples, at least {MIN_SAMPLES} are needed"
        )));
    }
    if signal.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("input holds non-finite values".into()));
    }
    let filter = options.filter()?;
    let pyramid = pyramid_of(signal, &filter)?;
    let hmin = estimate_hmin(&pyramid, options)?;
    let mut warnings = Vec::new();
    let (eta, p0) = match &options.p0 {
        Some(cfg) => match estimate_p0(&pyramid, cfg) {
            Ok((curve, p0)) => (
                curve.p_grid.iter().copied().zip(curve.eta.iter().copied()).collect(),
                Some(p0),
            ),
            Err(Error::NoValidP) => {
                warnings.push("eta(p) <= 0 on the whole grid: no p-leader is well defined".to_string());
                (Vec::new(), None)
            }
            Err(e) => return Err(e),
        },
        None => (Vec::new(), None),
    };
    if let Some(PValue::Finite(p0v)) = p0 {
        for p in options.p_list.iter().filter_map(|p| p.finite()) {
            if p > p0v {
                warnings.push(format!(
                    "p = {p} exceeds the estimated critical index {p0v:.3}: spectra may be tangent to the bound D <= d + h p"
                ));
            }
        }
    }
    if hmin <= 0.0 && options.p_list.iter().any(|p| p.is_infinite()) {
        warnings.push(format!("hmin = {hmin:.3} <= 0: wavelet leaders (p = inf) are not meaningful"));
    }
    let lcfg = options.leader_config();
    let leaders = options
        .p_list
        .iter()
        .map(|&p| analyze_leaders(&pyramid, p, &lcfg))
        .collect::<Result<Vec<_>>>()?;
    for a in &leaders {
        if a.estimates.eta_p.is_some() && options.corrected && !a.estimates.correction_applied {
            warnings.push(format!(
                "p = {}: eta(p) <= 0, finite-size correction skipped",
                a.estimates.p
            ));
        }
        if let Some(b) = &a.bound {
            if !b.violations.is_empty() {
                warnings.push(format!(
                    "p = {}: spectrum exceeds d + h p by up to {:.3} at {} points",
                    b.p,
                    b.max_violation,
                    b.violations.len()
                ));
            }
        }
    }
    let mfdfa = match (signal, &options.mfdfa) {
        (Signal::Series(x), Some(spec)) => Some(run_mfdfa(x, options, spec)?),
        _ => None,
    };
    Ok(AnalysisBundle {
        dimension: pyramid.dim.d(),
        samples: count,
        options: options.clone(),
        hmin,
        eta,
        p0_hat: p0,
        leaders,
        mfdfa,
        warnings,
    })
}

pub fn analyze_file(path: &Path, options: &AnalysisOptions) -> Result<AnalysisBundle> {
    analyze_signal(&io::read_signal(path)?, options)
}

/// Writes `bundle.json`, `log.json` and per-estimator CSV tables into `dir`.
pub fn write_bundle(dir: &Path, bundle: &AnalysisBundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_json_file(&dir.join("bundle.json"), bundle)?;
    let log = serde_json::json!({
        "hmin": bundle.hmin,
        "eta": bundle.eta,
        "p0_hat": bundle.p0_hat,
        "warnings": bundle.warnings,
    });
    io::write_json_file(&dir.join("log.json"), &log)?;
    let mut tables: Vec<(String, &ScalingEstimates, &LegendreSpectrum)> = bundle
        .leaders
        .iter()
        .map(|a| (format!("p{}", a.estimates.p), &a.estimates, &a.spectrum))
        .collect();
    if let Some((e, s)) = &bundle.mfdfa {
        tables.push(("mfdfa".into(), e, s));
    }
    for (tag, est, spec) in tables {
        let rows: Vec<Vec<String>> = est
            .q_grid
            .iter()
            .zip(&est.zeta)
            .zip(spec.h.iter().zip(&spec.l))
            .map(|((q, z), (h, l))| vec![fmt_f64(*q), fmt_f64(*z), fmt_f64(*h), fmt_f64(*l)])
            .collect();
        io::write_csv(&dir.join(format!("{tag}_scaling.csv")), &["q", "zeta", "h", "L"], &rows)?;
        let crow: Vec<Vec<String>> = est
            .cumulants
            .iter()
            .enumerate()
            .map(|(m, c)| vec![(m + 1).to_string(), fmt_f64(*c)])
            .collect();
        io::write_csv(&dir.join(format!("{tag}_cumulants.csv")), &["m", "c"], &crow)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 1.0, 1.0], 1.0).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 2.0], 1.0).unwrap(), 1.0);
        let r = rmse(&[0.74, 0.78, 0.76], 0.76).unwrap();
        assert!((r - (0.0008f64 / 3.0).sqrt()).abs() < 1e-15 && (r - 0.01633).abs() < 1e-5);
        assert!(matches!(rmse(&[], 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn aggregate_decomposes_rmse() {
        let v = [0.1, 0.4, -0.3, 0.25, 0.9];
        let a = aggregate_one("x", 1, 0.2, &v, 0).unwrap();
        assert!((a.rmse.powi(2) - (a.bias.powi(2) + a.sd.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn oracle_passthrough_has_zero_rmse() {
        let mut cfg = ExperimentConfig::default();
        cfg.analysis.p_list = vec![PValue::Finite(2.0)];
        cfg.analysis.mfdfa = None;
        let est = Estimator::Leader(PValue::Finite(2.0));
        let truth: Vec<f64> = cfg.process.truth(est).iter().map(|t| t.unwrap()).collect();
        let records = (0..5)
            .map(|i| RealizationRecord {
                index: i,
                seed: i as u64,
                hmin: None,
                p0_hat: None,
                estimates: vec![EstimatorRecord {
                    estimator: est.to_string(),
                    cumulants: truth.clone(),
                    zeta: vec![],
                    h: vec![],
                    l: vec![],
                    mode: truth[0],
                    eta_p: None,
                    correction_applied: false,
                }],
            })
            .collect();
        let rs = summarize(&cfg, records, vec![]).unwrap();
        assert_eq!(rs.aggregates.len(), 4);
        assert!(rs.aggregates.iter().all(|a| a.rmse == 0.0 && a.n == 5));
    }

    #[test]
    fn estimator_labels_roundtrip() {
        for s in ["p=0.25", "p=inf", "mfdfa", "p=2"] {
            assert_eq!(s.parse::<Estimator>().unwrap().to_string(), s);
        }
        assert!("p=-1".parse::<Estimator>().is_err() || "x".parse::<Estimator>().is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = ExperimentConfig {
            process: Process::Cmc(CmcParams::default()),
            trend: None,
            ..ExperimentConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        let minimal: ExperimentConfig =
            serde_json::from_str(r#"{"process":"mrw","nu":0.6,"realizations":3}"#).unwrap();
        assert!(matches!(minimal.process, Process::Mrw(ref m) if m.nu == 0.6));
        assert_eq!(minimal.analysis.p_list.len(), 9);
    }

    #[test]
    fn small_experiment_resumes_identically() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            process: Process::Mrw(MrwParams {
                n: 1 << 12,
                seed: 7,
                ..MrwParams::default()
            }),
            realizations: 3,
            ..ExperimentConfig::default()
        };
        cfg.analysis.p_list = vec![PValue::Finite(1.0), PValue::Infinite];
        cfg.analysis.j1 = 2;
        let fresh = run_experiment(&cfg).unwrap();

        cfg.output = Some(dir.path().to_path_buf());
        cfg.realizations = 2;
        run_experiment(&cfg).unwrap();
        cfg.realizations = 3;
        let resumed = run_experiment(&cfg).unwrap();
        assert_eq!(resumed.records, fresh.records);
        assert_eq!(resumed.aggregates, fresh.aggregates);
        assert!(dir.path().join("aggregate.csv").exists());
        assert!(dir.path().join("shards/r000002.csv").exists());

        cfg.analysis.j1 = 3;
        assert!(matches!(run_experiment(&cfg), Err(Error::ParameterInconsistency(_))));
    }

    #[test]
    fn analyze_signal_contracts() {
        let short = Signal::Series(vec![1.0; 100]);
        assert!(matches!(
            analyze_signal(&short, &AnalysisOptions::default()),
            Err(Error::InsufficientData(_))
        ));
        let constant = Signal::Series(vec![3.0; 4096]);
        assert!(matches!(
            analyze_signal(&constant, &AnalysisOptions::default()),
            Err(Error::DegenerateData { .. })
        ));
    }
}
