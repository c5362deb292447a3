//! `supfbm`: evaluate sup-functional derivatives, tabulate them, and run the validation suite.

mod record;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use supfbm::densities::Horizon;
use supfbm::functionals::{deriv, wills_rate_deriv, Family, FunctionalSpec, Method};
use supfbm::pwz_sim::{mc_coupled_fd, mc_deriv_direct, sample_brownian, GridShape, McConfig};
use supfbm::quadrature::QuadConfig;
use supfbm::specfun::HurstParam;
use supfbm::validation::{self, Fault, Level, ValidationOptions};
use supfbm::Error;

use record::{Format, RunRecord, TableRow};

const EXIT_ROW_FAILED: u8 = 1;
const EXIT_ADMISSIBILITY: u8 = 2;
const EXIT_ACCURACY: u8 = 3;

#[derive(Parser)]
#[command(name = "supfbm", version, about = "Hurst derivatives of fBm sup-functionals at H = 1/2")]
struct Cli {
    /// Worker threads for Monte Carlo runs (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one derivative.
    Deriv(DerivArgs),
    /// Tabulate derivatives over a grid of drifts or horizons.
    Table(TableArgs),
    /// Run the acceptance criteria.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    M,
    P,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::M => Family::M,
            FamilyArg::P => Family::P,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Quad,
    Closed,
    McFd,
    McDirect,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Quad => "quad",
            MethodArg::Closed => "closed",
            MethodArg::McFd => "mc-fd",
            MethodArg::McDirect => "mc-direct",
        }
    }
}

#[derive(Args, Clone)]
struct EvalArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value = "quad")]
    method: MethodArg,
    /// Relative tolerance of quadrature.
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Seed of Monte Carlo runs.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo paths.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    /// Uniform grid cells on [0, T] (or on the truncated horizon).
    #[arg(long, default_value_t = 1024)]
    steps: usize,
    /// Finite-difference step in H for mc-fd.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
}

#[derive(Args)]
struct DerivArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Horizon: a positive number or `inf`.
    #[arg(long = "T")]
    horizon: Horizon,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    /// Write the first sampled paths of a Monte Carlo run as CSV files into this directory.
    #[arg(long)]
    dump_paths: Option<PathBuf>,
    /// Number of paths written by --dump-paths.
    #[arg(long, default_value_t = 1)]
    dump_count: u64,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Drift grid `lo:hi:n` (n evenly spaced points, ends included).
    #[arg(long, conflicts_with = "t_grid")]
    a_grid: Option<String>,
    /// Horizon grid `lo:hi:n`.
    #[arg(long = "T-grid")]
    t_grid: Option<String>,
    /// Fixed horizon for a drift grid.
    #[arg(long = "T", default_value = "inf")]
    horizon: Horizon,
    /// Fixed drift for a horizon grid.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Report P'(T, 1) / T instead of P'(T, 1).
    #[arg(long)]
    rate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FaultArg {
    WrongSignDensity,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value = "fast")]
    level: LevelArg,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Monte Carlo paths per estimator.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Run with a deliberate defect to exercise the failure path.
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let run = || match cli.command {
        Command::Deriv(args) => cmd_deriv(args),
        Command::Table(args) => cmd_table(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("error: cannot start {n} threads: {e}");
                ExitCode::from(EXIT_ROW_FAILED)
            }
        },
        None => run(),
    }
}

struct Evaluation {
    value: f64,
    err: f64,
    count: u64,
    seed: Option<u64>,
}

fn evaluate(e: &EvalArgs, horizon: Horizon, a: f64) -> Result<Evaluation, Error> {
    let family = Family::from(e.family);
    match e.method {
        MethodArg::Quad | MethodArg::Closed => {
            let method = if e.method == MethodArg::Quad { Method::Quadrature } else { Method::ClosedForm };
            let spec = FunctionalSpec::new(family, horizon, a, method)?;
            let cfg = QuadConfig::default().with_rel_tol(e.rel_tol);
            let d = deriv(&spec, &cfg)?;
            Ok(Evaluation { value: d.value, err: d.err_est, count: d.evals as u64, seed: None })
        }
        MethodArg::McFd | MethodArg::McDirect => {
            let cfg = mc_config(e, horizon);
            let est = if e.method == MethodArg::McFd {
                mc_coupled_fd(&cfg, family, a, e.delta)?
            } else {
                if family != Family::M {
                    return Err(Error::Unsupported("the direct estimator covers family m only".into()));
                }
                mc_deriv_direct(&cfg, a)?
            };
            Ok(Evaluation { value: est.mean, err: est.stderr, count: est.n as u64, seed: Some(est.seed) })
        }
    }
}

fn mc_config(e: &EvalArgs, horizon: Horizon) -> McConfig {
    McConfig::new(horizon, HurstParam::HALF, e.paths, e.seed).with_n_steps(e.steps)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Admissibility(_) => EXIT_ADMISSIBILITY,
        Error::AccuracyNotReached { .. } => EXIT_ACCURACY,
        _ => EXIT_ROW_FAILED,
    }
}

fn cmd_deriv(args: DerivArgs) -> ExitCode {
    let start = Instant::now();
    let e = &args.eval;
    let family = Family::from(e.family);
    let result = evaluate(e, args.horizon, args.a);
    let (eval, code) = match result {
        Ok(v) => (v, 0),
        Err(err) => {
            eprintln!("error: {err}");
            match err.best_effort() {
                // Accuracy failures still report the best value found.
                Some(best) => (Evaluation { value: best.value, err: best.err_est, count: best.evals as u64, seed: None }, exit_code_for(&err)),
                None => return ExitCode::from(exit_code_for(&err)),
            }
        }
    };
    let record = RunRecord {
        functional: format!("{family}'"),
        horizon: args.horizon.to_string(),
        a: args.a,
        h: 0.5,
        method: e.method.name().to_string(),
        value: eval.value,
        error_estimate: eval.err,
        n_evals_or_paths: eval.count,
        seed: eval.seed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    let format = if args.csv { Format::Csv } else { Format::Json };
    if let Err(err) = record.write(format, &mut io::stdout().lock()) {
        eprintln!("error: {err}");
        return ExitCode::from(EXIT_ROW_FAILED);
    }
    if let Some(dir) = &args.dump_paths {
        if let Err(err) = dump_paths(e, args.horizon, args.a, dir, args.dump_count) {
            eprintln!("error: path dump failed: {err}");
            return ExitCode::from(EXIT_ROW_FAILED);
        }
    }
    ExitCode::from(code)
}

fn dump_paths(e: &EvalArgs, horizon: Horizon, a: f64, dir: &PathBuf, count: u64) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = mc_config(e, horizon);
    let (lo, hi) = (0.5 - e.delta, 0.5 + e.delta);
    let t = cfg.effective_horizon(Family::from(e.family), a, lo, hi)?;
    let shape = GridShape::new(t, cfg.n_steps)?.with_neg_extent(cfg.neg_extent_factor * t)?;
    std::fs::create_dir_all(dir)?;
    for p in 0..count {
        let path = sample_brownian(&shape, cfg.seed, p);
        let mut w = csv::Writer::from_path(dir.join(format!("path_{p}.csv")))?;
        w.write_record(["node_time", "value"])?;
        for (t, v) in path.times().iter().zip(path.values()) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// `lo:hi:n` as `n` evenly spaced points with both ends included.
fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("grid '{s}' is not of the form lo:hi:n"));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad grid start '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad grid end '{hi}'"))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad grid size '{n}'"))?;
    Ok(match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    })
}

fn cmd_table(args: TableArgs) -> ExitCode {
    let e = &args.eval;
    let family = Family::from(e.family);
    let rows: Vec<(Horizon, f64)> = match (&args.a_grid, &args.t_grid) {
        (Some(g), None) => match parse_grid(g) {
            Ok(v) => v.into_iter().map(|a| (args.horizon, a)).collect(),
            Err(msg) => return usage_error(&msg),
        },
        (None, Some(g)) => {
            let Some(a) = args.a.or(args.rate.then_some(1.0)) else {
                return usage_error("a horizon grid needs --a");
            };
            match parse_grid(g) {
                Ok(v) => v.into_iter().map(|t| (Horizon::Finite(t), a)).collect(),
                Err(msg) => return usage_error(&msg),
            }
        }
        _ => return usage_error("give exactly one of --a-grid and --T-grid"),
    };
    if args.rate && (family != Family::P || e.method != MethodArg::Quad) {
        return usage_error("--rate needs --family p and --method quad");
    }
    let mut out = io::stdout().lock();
    let mut w = TableRow::writer(&mut out);
    if let Err(err) = TableRow::header(&mut w) {
        eprintln!("error: {err}");
        return ExitCode::from(EXIT_ROW_FAILED);
    }
    let mut failed = false;
    for (horizon, a) in rows {
        let value = if args.rate {
            match horizon {
                Horizon::Finite(t) if a == 1.0 => {
                    wills_rate_deriv(t, &QuadConfig::default().with_rel_tol(e.rel_tol))
                        .map(|r| (r.value, r.err_est))
                }
                _ => Err(Error::Config("--rate needs a finite horizon and a = 1".into())),
            }
        } else {
            evaluate(e, horizon, a).map(|v| (v.value, v.err))
        };
        let (value, err) = value.unwrap_or_else(|err| {
            eprintln!("row T = {horizon}, a = {a}: {err}");
            failed = true;
            (f64::NAN, f64::NAN)
        });
        let row = TableRow {
            family: family.to_string(),
            horizon: horizon.to_string(),
            a,
            method: e.method.name().to_string(),
            value,
            error_estimate: err,
        };
        if let Err(err) = row.write(&mut w) {
            eprintln!("error: {err}");
            return ExitCode::from(EXIT_ROW_FAILED);
        }
    }
    if let Err(err) = w.flush() {
        eprintln!("error: {err}");
        return ExitCode::from(EXIT_ROW_FAILED);
    }
    ExitCode::from(if failed { EXIT_ROW_FAILED } else { 0 })
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_ROW_FAILED)
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let level = match args.level {
        LevelArg::Fast => Level::Fast,
        LevelArg::Full => Level::Full,
    };
    let opts = ValidationOptions {
        n_paths: args.paths,
        fault: args.inject_fault.map(|FaultArg::WrongSignDensity| Fault::WrongSignDensity),
        ..ValidationOptions::new(level, args.seed)
    };
    let report = validation::run(&opts);
    let mut out = io::stdout().lock();
    let written = if args.json {
        serde_json::to_writer(&mut out, &report).map_err(io::Error::from).and_then(|_| writeln!(out))
    } else {
        write!(out, "{report}")
    };
    if let Err(err) = written {
        eprintln!("error: {err}");
        return ExitCode::from(EXIT_ROW_FAILED);
    }
    ExitCode::from(if report.all_passed() { 0 } else { EXIT_ROW_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_arithmetic() {
        assert_eq!(parse_grid("1.5:4:3").unwrap(), vec![1.5, 2.75, 4.0]);
        assert_eq!(parse_grid("10:100:2").unwrap(), vec![10.0, 100.0]);
        assert!(parse_grid("1:2:0").unwrap().is_empty());
        assert_eq!(parse_grid("3:9:1").unwrap(), vec![3.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a:2:3").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&Error::Admissibility(String::new())), 2);
        assert_eq!(exit_code_for(&Error::Config(String::new())), 1);
    }
}
