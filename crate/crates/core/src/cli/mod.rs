//! Command-line front end: `hlde run` and `hlde sweep`.
//!
//! Exit codes: 0 on success, 1 on input or usage errors, 2 when the circuit
//! ran but post-selection was impossible.

mod problem;
mod report;

pub use problem::{parse_boost, parse_mode, parse_problem, parse_problem_bytes, serialize_problem, ProblemFile};
pub use report::{build_report, num, render, sha256_hex, ReportContext, Sizing};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::circuit::EigenvalueMode;
use crate::numerics::{hermitian_eig, HERMITIAN_TOL};
use crate::oracle::ErrorBudget;
use crate::solver::{
    estimate_big_l, estimate_l_full, solve, BoostPolicy, RunMode, SolveError, SolveReport,
    SolverConfig, Warning,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at {field}: {message}")]
    Parse { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Problem(#[from] SolveError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Problem(SolveError::ImpossibleOutcome { .. } | SolveError::ZeroSuccess) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hlde", version)]
#[command(about = "Simulate the amplitude-damping circuit for dx/dt = Ax and report the reconstructed solution")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem and write a report.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Report path; stdout gets only the summary line.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one problem over a range of register sizes or times.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// `l=A..B` (inclusive) or `t=T1,T2,...`.
        #[arg(long)]
        sweep: String,
        /// Directory for one report per point.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Restricted,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoostArg {
    Off,
    Guarantee,
    ZeroMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RunArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SizingArg {
    /// `L` from `‖A‖t e^{‖A‖t} ‖x0‖ / ε`.
    L,
    /// `l` with the condition-number term (restricted mode).
    Full,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Qubits in the phase register (and in the environment register).
    #[arg(long)]
    phase_qubits: Option<usize>,
    /// Choose the register size from --eps.
    #[arg(long, requires = "eps")]
    auto_size: bool,
    /// Target error for --auto-size.
    #[arg(long)]
    eps: Option<f64>,
    /// Estimator used by --auto-size.
    #[arg(long, value_enum, default_value = "l")]
    sizing: SizingArg,
    /// Overrides the problem file; defaults to restricted.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Overrides the problem file; defaults to off.
    #[arg(long, value_enum)]
    boost: Option<BoostArg>,
    #[arg(long = "run", value_enum, default_value = "exact")]
    run_mode: RunArg,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also post-select the phase register on all zeros.
    #[arg(long)]
    postselect_phase: bool,
    /// Compute e^{At}x0 classically and report errors against it.
    #[arg(long)]
    compare_oracle: bool,
    /// Precision P for the bound evaluations; defaults to 1/sqrt(L).
    #[arg(long)]
    precision: Option<f64>,
    /// Include wall-clock time in the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
}

/// Everything needed to solve one point.
struct Prepared {
    file: ProblemFile,
    path: String,
    config: SolverConfig,
    sizing: Sizing,
    precision: Option<f64>,
    timing: bool,
}

fn prepare(args: &CommonArgs) -> Result<Prepared, CliError> {
    let file = parse_problem(&args.problem)?;
    let mode = match args.mode {
        Some(ModeArg::Restricted) => EigenvalueMode::RestrictedPositive,
        Some(ModeArg::General) => EigenvalueMode::GeneralHermitian,
        None => file.mode.unwrap_or(EigenvalueMode::RestrictedPositive),
    };
    let boost = match args.boost {
        Some(BoostArg::Off) => None,
        Some(BoostArg::Guarantee) => Some(BoostPolicy::Guarantee),
        Some(BoostArg::ZeroMean) => Some(BoostPolicy::ZeroMean),
        None => file.boost.clone(),
    };
    let run_mode = match args.run_mode {
        RunArg::Exact => RunMode::ExactPostselect,
        RunArg::Sampled => RunMode::Sampled {
            shots: args.shots,
            seed: args.seed,
        },
    };
    let (l, sizing) = match (args.phase_qubits, args.auto_size) {
        (Some(_), true) => {
            return Err(CliError::Usage("--phase-qubits and --auto-size are mutually exclusive".into()))
        }
        (Some(l), false) => (l, Sizing::Fixed),
        (None, true) => {
            let eps = args.eps.expect("clap enforces --eps");
            auto_size(&file, mode, eps, args.sizing)?
        }
        (None, false) => return Err(CliError::Usage("one of --phase-qubits or --auto-size is required".into())),
    };
    if let Some(p) = args.precision {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Usage(format!("--precision must lie in (0, 1), got {p}")));
        }
    }
    let config = SolverConfig {
        l,
        mode,
        postselect_phase: args.postselect_phase,
        run_mode,
        boost,
        compare_oracle: args.compare_oracle,
    };
    config.validate()?;
    Ok(Prepared {
        file,
        path: args
            .problem
            .file_name()
            .map_or_else(|| args.problem.display().to_string(), |n| n.to_string_lossy().into_owned()),
        config,
        sizing,
        precision: args.precision,
        timing: args.timing,
    })
}

fn auto_size(
    file: &ProblemFile,
    mode: EigenvalueMode,
    eps: f64,
    sizing: SizingArg,
) -> Result<(usize, Sizing), CliError> {
    let p = &file.problem;
    let spec = hermitian_eig(p.a(), HERMITIAN_TOL).map_err(SolveError::from)?;
    let norm_x0 = p.x0().norm();
    match sizing {
        SizingArg::L => {
            let big_l = estimate_big_l(spec.norm_a, p.t(), eps, norm_x0).map_err(SolveError::from)?;
            Ok((big_l.trailing_zeros() as usize, Sizing::EstimateBigL { eps }))
        }
        SizingArg::Full => {
            let kappa = match (mode, spec.kappa) {
                (EigenvalueMode::RestrictedPositive, Some(k)) => k,
                _ => {
                    return Err(CliError::Usage(
                        "--sizing full needs restricted mode and a positive spectrum".into(),
                    ))
                }
            };
            let l = estimate_l_full(spec.norm_a, p.t(), eps, norm_x0, kappa).map_err(SolveError::from)?;
            Ok((l, Sizing::EstimateLFull { eps }))
        }
    }
}

struct Outcome {
    report: SolveReport,
    document: String,
}

fn execute(prep: &Prepared, problem: &crate::solver::HldeProblem, config: &SolverConfig) -> Result<Outcome, CliError> {
    let report = solve(problem, config)?;
    let big_l = 1usize << config.l;
    let precision = prep.precision.unwrap_or(1.0 / (big_l as f64).sqrt());
    let budget = ErrorBudget::evaluate(big_l, precision, report.norm_a, problem.t(), config.mode, report.kappa)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut extra = Vec::new();
    if budget.kappa_warning {
        if let Some(kappa) = report.kappa {
            extra.push(Warning::KappaGuard { precision, kappa }.to_string());
        }
    }
    let ctx = ReportContext {
        problem_path: &prep.path,
        input_bytes: &prep.file.bytes,
        sizing: prep.sizing.clone(),
        budget: &budget,
        extra_warnings: &extra,
        include_timing: prep.timing,
    };
    let document = render(&build_report(&report, &ctx));
    Ok(Outcome { report, document })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"))
}

fn summary_line(r: &SolveReport) -> String {
    format!(
        "p_S={:.10} p_S_empirical={} additive_error={} fidelity={} runtime_ms={:.3}",
        r.p_success_exact,
        fmt_opt(r.p_success_empirical),
        fmt_opt(r.additive_error),
        fmt_opt(r.fidelity),
        r.timing_ms
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run_command(common: &CommonArgs, out: Option<&Path>) -> Result<(), CliError> {
    let prep = prepare(common)?;
    let outcome = execute(&prep, &prep.file.problem, &prep.config)?;
    for w in &outcome.report.warnings {
        eprintln!("warning: {w}");
    }
    match out {
        Some(path) => write_file(path, &outcome.document)?,
        None => print!("{}", outcome.document),
    }
    println!("{}", summary_line(&outcome.report));
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepSpec {
    PhaseQubits(Vec<usize>),
    Times(Vec<f64>),
}

pub fn parse_sweep(spec: &str) -> Result<SweepSpec, CliError> {
    let usage = |m: &str| CliError::Usage(format!("--sweep {spec:?}: {m}"));
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| usage("expected l=A..B or t=T1,T2,..."))?;
    match key.trim() {
        "l" => {
            let (a, b) = value
                .split_once("..")
                .ok_or_else(|| usage("expected a range A..B"))?;
            let a: usize = a.trim().parse().map_err(|_| usage("bad range start"))?;
            let b: usize = b.trim().parse().map_err(|_| usage("bad range end"))?;
            if a == 0 || a > b {
                return Err(usage("range must satisfy 1 <= A <= B"));
            }
            Ok(SweepSpec::PhaseQubits((a..=b).collect()))
        }
        "t" => {
            let times: Vec<f64> = value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| usage(&format!("bad time {s:?}"))))
                .collect::<Result<_, _>>()?;
            if times.is_empty() {
                return Err(usage("empty time list"));
            }
            if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
                return Err(usage(&format!("time {t} must be finite and non-negative")));
            }
            Ok(SweepSpec::Times(times))
        }
        other => Err(usage(&format!("unknown sweep variable {other:?}"))),
    }
}

fn sweep_command(common: &CommonArgs, spec: &str, out_dir: Option<&Path>) -> Result<(), CliError> {
    let spec = parse_sweep(spec)?;
    let mut common = common.clone();
    if matches!(spec, SweepSpec::PhaseQubits(_)) {
        common.phase_qubits = Some(common.phase_qubits.unwrap_or(1));
        common.auto_size = false;
    }
    let prep = prepare(&common)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let points: Vec<(String, crate::solver::HldeProblem, SolverConfig)> = match &spec {
        SweepSpec::PhaseQubits(ls) => ls
            .iter()
            .map(|&l| {
                let config = SolverConfig { l, ..prep.config.clone() };
                (format!("l={l}"), prep.file.problem.clone(), config)
            })
            .collect(),
        SweepSpec::Times(ts) => ts
            .iter()
            .map(|&t| Ok((format!("t={t}"), prep.file.problem.with_time(t)?, prep.config.clone())))
            .collect::<Result<_, SolveError>>()?,
    };

    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<10} {:>24} {:>24} {:>24} {:>24} {:>24}",
        "point", "p_success", "additive_error", "eps_qpe", "eps_pr_1", "eps_pr_2"
    );
    for (i, (label, problem, config)) in points.iter().enumerate() {
        let outcome = execute(&prep, problem, config)?;
        let doc: serde_json::Value = serde_json::from_str(&outcome.document).expect("own output");
        let bound = |k: &str| doc["bounds"][k].to_string();
        let _ = writeln!(
            table,
            "{:<10} {:>24} {:>24} {:>24} {:>24} {:>24}",
            label,
            num(outcome.report.p_success_empirical.unwrap_or(outcome.report.p_success_exact)).to_string(),
            outcome.report.additive_error.map_or("null".into(), |e| num(e).to_string()),
            bound("eps_qpe"),
            bound("eps_pr_1"),
            bound("eps_pr_2"),
        );
        if let Some(dir) = out_dir {
            write_file(&dir.join(format!("point_{i:03}.json")), &outcome.document)?;
        }
    }
    if let Some(dir) = out_dir {
        write_file(&dir.join("summary.txt"), &table)?;
    }
    print!("{table}");
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run { common, out } => run_command(common, out.as_deref()),
        Command::Sweep { common, sweep, out_dir } => sweep_command(common, sweep, out_dir.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run_with_args(std::env::args_os())
}
