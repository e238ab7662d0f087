//! Command-line front end: analysis of files, synthesis, Monte Carlo runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pleaders::dwt::daubechies_filter;
use pleaders::harness::{
    analyze_file, compare, run_experiment, write_bundle, AnalysisOptions, Estimator, ExperimentConfig, MfdfaSpec,
    Process,
};
use pleaders::io::{self, Signal};
use pleaders::leaders::{Neighborhood, P0_GRID};
use pleaders::synth::{gen_deterministic_cascade, oracles, CmcKind, CmcParams, LwsParams, MrwParams};
use pleaders::{Error, ErrorKind, PValue};

/// Environment variable holding the default worker count.
const THREADS_ENV: &str = "PLEADERS_THREADS";

#[derive(Parser)]
#[command(name = "pleaders", version, about = "p-leader multifractal analysis toolkit")]
struct Cli {
    /// Worker threads for Monte Carlo runs (default: $PLEADERS_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a series or field stored as CSV or .bin + .json header.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic process and write it with its oracle values.
    Synth(SynthArgs),
    /// Run a Monte Carlo experiment from a JSON configuration.
    Mc(McArgs),
    /// Paired rmse of two estimators over a Monte Carlo experiment.
    Compare(CompareArgs),
}

#[derive(Args)]
struct EstimatorFlags {
    /// Comma-separated p values, e.g. `0.5,1,2,inf`.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<PValue>>,
    #[arg(long)]
    j1: Option<usize>,
    #[arg(long)]
    j2: Option<usize>,
    /// Vanishing moments of the Daubechies wavelet.
    #[arg(long)]
    vanishing_moments: Option<usize>,
    /// Disable the finite-size correction.
    #[arg(long)]
    uncorrected: bool,
    /// Use the cube alone instead of its 3^d neighbourhood.
    #[arg(long)]
    restricted: bool,
    /// Skip MFDFA.
    #[arg(long)]
    no_mfdfa: bool,
    /// MFDFA detrending degree.
    #[arg(long)]
    mfdfa_degree: Option<usize>,
}

impl EstimatorFlags {
    fn apply(&self, o: &mut AnalysisOptions) {
        if let Some(p) = &self.p {
            o.p_list = p.clone();
        }
        if let Some(j) = self.j1 {
            o.j1 = j;
        }
        if self.j2.is_some() {
            o.j2 = self.j2;
        }
        if let Some(v) = self.vanishing_moments {
            o.vanishing_moments = v;
        }
        if self.uncorrected {
            o.corrected = false;
        }
        if self.restricted {
            o.neighborhood = Neighborhood::Restricted;
        }
        if let Some(d) = self.mfdfa_degree {
            o.mfdfa.get_or_insert_with(MfdfaSpec::default).degree = d;
        }
        if self.no_mfdfa {
            o.mfdfa = None;
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    /// JSON file with analysis options; flags override it.
    #[arg(long)]
    options: Option<PathBuf>,
    #[command(flatten)]
    flags: EstimatorFlags,
    /// Directory for bundle.json, log.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcessName {
    Mrw,
    Lws,
    CmcLn,
    CmcLp,
    /// Deterministic binomial wavelet cascade, written as a pyramid directory.
    Cascade,
}

#[derive(Args)]
struct SynthArgs {
    process: ProcessName,
    /// Output file (.bin for binary, anything else for CSV) or directory for `cascade`.
    #[arg(long)]
    out: PathBuf,
    /// JSON file with process parameters; flags override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Series length (MRW, LWS).
    #[arg(long)]
    n: Option<usize>,
    /// Field side (CMC).
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    hurst: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Fractional differentiation order (MRW).
    #[arg(long)]
    nu: Option<f64>,
    /// LWS amplitude exponent or CMC integration order.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lacunarity: Option<f64>,
    /// Log-normal multiplier parameter.
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Cascade weights.
    #[arg(long, default_value_t = 0.4)]
    omega0: f64,
    #[arg(long, default_value_t = 0.6)]
    omega1: f64,
    /// Cascade depth.
    #[arg(long, default_value_t = 14)]
    levels: usize,
}

#[derive(Args)]
struct McArgs {
    config: PathBuf,
    #[arg(long)]
    realizations: Option<usize>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    config: PathBuf,
    /// First estimator, e.g. `p=2`.
    #[arg(long)]
    a: Estimator,
    /// Second estimator, e.g. `mfdfa` or `p=inf`.
    #[arg(long)]
    b: Estimator,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Io => 1,
        ErrorKind::Usage => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads.filter(|&t| t > 0) {
        // fails only if a pool exists already, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

/// Writes to stdout, ignoring a closed pipe (e.g. output piped into `head`).
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn print_json(value: &serde_json::Value) {
    emit(&serde_json::to_string_pretty(value).expect("serializable"));
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let mut options: AnalysisOptions = match &args.options {
        Some(p) => io::read_json_file(p)?,
        None => AnalysisOptions::default(),
    };
    args.flags.apply(&mut options);
    let bundle = analyze_file(&args.input, &options)?;
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = &args.out {
        write_bundle(dir, &bundle)?;
    }
    let mut estimates: Vec<serde_json::Value> = bundle
        .leaders
        .iter()
        .map(|a| {
            json!({
                "estimator": Estimator::Leader(a.estimates.p).to_string(),
                "cumulants": a.estimates.cumulants,
                "eta_p": a.estimates.eta_p,
                "corrected": a.estimates.correction_applied,
                "j1": a.estimates.j1,
                "j2": a.estimates.j2,
            })
        })
        .collect();
    if let Some((e, _)) = &bundle.mfdfa {
        estimates.push(json!({
            "estimator": "mfdfa",
            "cumulants": e.cumulants,
            "j1": e.j1,
            "j2": e.j2,
        }));
    }
    print_json(&json!({
        "input": args.input,
        "dimension": bundle.dimension,
        "samples": bundle.samples,
        "hmin": bundle.hmin,
        "p0_hat": bundle.p0_hat,
        "estimates": estimates,
        "warnings": bundle.warnings,
    }));
    Ok(())
}

fn load_params<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T, Error> {
    match path {
        Some(p) => io::read_json_file(p),
        None => Ok(T::default()),
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn eta_table(f: impl Fn(f64) -> f64) -> Vec<serde_json::Value> {
    P0_GRID.iter().map(|&p| json!({ "p": p, "eta": f(p) })).collect()
}

fn cmd_synth(a: SynthArgs) -> Result<(), Error> {
    let (process, oracle) = match a.process {
        ProcessName::Mrw => {
            let mut p: MrwParams = load_params(&a.params)?;
            set(&mut p.seed, a.seed);
            set(&mut p.n, a.n);
            set(&mut p.hurst, a.hurst);
            set(&mut p.lambda, a.lambda);
            set(&mut p.nu, a.nu);
            let (c1, c2) = oracles::mrw_cumulants(&p);
            let p0 = match oracles::mrw_p0(&p) {
                Ok(v) if v.is_infinite() => json!("inf"),
                Ok(v) => json!(v),
                Err(_) => json!(null),
            };
            let oracle = json!({
                "c1": c1, "c2": c2, "c3": 0.0, "c4": 0.0, "p0": p0,
                "eta": eta_table(|q| oracles::mrw_eta(&p, q)),
            });
            (Process::Mrw(p), oracle)
        }
        ProcessName::Lws => {
            let mut p: LwsParams = load_params(&a.params)?;
            set(&mut p.seed, a.seed);
            set(&mut p.n, a.n);
            set(&mut p.alpha, a.alpha);
            set(&mut p.lacunarity, a.lacunarity);
            let ends = pleaders::harness::default_p_list()
                .into_iter()
                .map(|pv| {
                    let s = oracles::lws_oracle(&p, pv.as_f64())?;
                    Ok(json!({ "p": pv, "left": s.left, "right": s.right }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            (Process::Lws(p), json!({ "spectrum_support": ends }))
        }
        ProcessName::CmcLn | ProcessName::CmcLp => {
            let mut p: CmcParams = load_params(&a.params)?;
            let default_kind = matches!(
                (a.process, &p.kind),
                (ProcessName::CmcLn, CmcKind::LogNormal { .. }) | (ProcessName::CmcLp, CmcKind::LogPoisson { .. })
            );
            if !default_kind {
                p.kind = match a.process {
                    ProcessName::CmcLn => CmcKind::LogNormal { m: 0.04 },
                    _ => CmcKind::LogPoisson { beta: 0.8395, gamma: 0.4195 },
                };
            }
            match &mut p.kind {
                CmcKind::LogNormal { m } => set(m, a.m),
                CmcKind::LogPoisson { beta, gamma } => {
                    set(beta, a.beta);
                    set(gamma, a.gamma);
                }
            }
            set(&mut p.seed, a.seed);
            set(&mut p.side, a.side);
            set(&mut p.alpha, a.alpha);
            let c = oracles::cmc_cumulants(&p);
            (Process::Cmc(p), json!({ "c1": c[0], "c2": c[1], "c3": c[2], "c4": c[3] }))
        }
        ProcessName::Cascade => {
            let sample = gen_deterministic_cascade(a.omega0, a.omega1, a.levels)?;
            io::write_pyramid_dir(&a.out, &sample.pyramid)?;
            let meta = json!({
                "process": "cascade",
                "omega0": a.omega0,
                "omega1": a.omega1,
                "levels": a.levels,
                "oracle": { "eta": (-20..=20).map(|i| {
                    let q = i as f64 * 0.25;
                    json!({ "q": q, "eta": sample.eta(q) })
                }).collect::<Vec<_>>() },
            });
            io::write_json_file(&a.out.join("meta.json"), &meta)?;
            eprintln!("wrote cascade pyramid to {}", a.out.display());
            return Ok(());
        }
    };
    let filter = daubechies_filter(2)?;
    let signal = process.generate(&filter)?;
    io::write_signal(&a.out, &signal)?;
    let meta = json!({ "params": process, "oracle": oracle, "samples": signal.len(), "dimension": match signal {
        Signal::Series(_) => 1,
        Signal::Field { .. } => 2,
    } });
    let side = sidecar_path(&a.out);
    io::write_json_file(&side, &meta)?;
    eprintln!("wrote {} and {}", a.out.display(), side.display());
    Ok(())
}

fn load_experiment(path: &Path, realizations: Option<usize>, out: Option<PathBuf>) -> Result<ExperimentConfig, Error> {
    let mut cfg: ExperimentConfig = io::read_json_file(path)?;
    set(&mut cfg.realizations, realizations);
    if out.is_some() {
        cfg.output = out;
    }
    Ok(cfg)
}

fn cmd_mc(a: McArgs) -> Result<(), Error> {
    let cfg = load_experiment(&a.config, a.realizations, a.out)?;
    let rs = run_experiment(&cfg)?;
    emit("estimator,target,truth,n,failures,mean,sd,bias,rmse");
    for g in &rs.aggregates {
        emit(&format!(
            "{},c{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            g.estimator, g.order, g.truth, g.n, g.failures, g.mean, g.sd, g.bias, g.rmse
        ));
    }
    if let Some(p0) = &rs.p0 {
        eprintln!(
            "p0: mean estimate {} over {} realizations (oracle {})",
            p0.mean,
            p0.n,
            p0.oracle.map(|p| p.to_string()).unwrap_or_else(|| "unknown".into())
        );
    }
    if !rs.failures.is_empty() {
        eprintln!("{} estimator failures (see failures.csv when an output directory is set)", rs.failures.len());
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<(), Error> {
    let mut cfg = load_experiment(&a.config, a.realizations, a.out)?;
    for est in [a.a, a.b] {
        match est {
            Estimator::Leader(p) if !cfg.analysis.p_list.contains(&p) => cfg.analysis.p_list.push(p),
            Estimator::Mfdfa if cfg.analysis.mfdfa.is_none() => cfg.analysis.mfdfa = Some(MfdfaSpec::default()),
            _ => {}
        }
    }
    let rs = run_experiment(&cfg)?;
    let rows = compare(&rs, a.a, a.b)?;
    emit(&format!("target,truth,n,rmse_{},rmse_{},ratio", a.a, a.b));
    for r in rows {
        emit(&format!("c{},{},{},{:.6},{:.6},{:.4}", r.order, r.truth, r.n, r.rmse_a, r.rmse_b, r.ratio));
    }
    Ok(())
}
