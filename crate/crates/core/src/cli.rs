//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code: 0 on success, 1 when a check or I/O
//! step fails, 2 for invalid input.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::error::Error;
use crate::estimator::EstimationMode;
use crate::experiment::{
    check_sweep, loglog_slope, read_csv, render_svg, run_sweep, series_by_f, write_csv,
    ExperimentConfig,
};
use crate::format::sig12;
use crate::qpd::{
    harada_wire_cut, nme_wire_cut, optimal_overhead, optimal_overhead_pure, QuasiProbDecomposition,
    RECONSTRUCTION_TOLERANCE,
};
use crate::states::{k_from_f, NmeParameter};

/// Environment variable supplying the default experiment seed.
pub const SEED_ENV: &str = "WIRECUT_SEED";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "wirecut",
    version,
    about = "Wire cutting with non-maximally entangled resource states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the optimal sampling overhead 2/f - 1.
    Overhead(OverheadArgs),
    /// Print the terms of the wire-cut decomposition for a given k.
    Decompose(DecomposeArgs),
    /// Check that decompositions reconstruct the identity channel exactly.
    Verify(VerifyArgs),
    /// Run the shot-budget sweep and write a CSV.
    Experiment(ExperimentArgs),
    /// Render a sweep CSV as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["k", "f"])))]
struct OverheadArgs {
    /// Resource parameter k >= 0 of K(|00> + k|11>).
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Maximal overlap f in [0.5, 1] with a Bell state.
    #[arg(long, allow_negative_numbers = true)]
    f: Option<f64>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    /// Resource parameter k >= 0.
    #[arg(long, allow_negative_numbers = true)]
    k: f64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("target").required(true).args(["k", "all"])))]
struct VerifyArgs {
    /// Resource parameter k >= 0.
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Check k = 0, 0.1, ..., 1 and the entanglement-free cut.
    #[arg(long)]
    all: bool,
}

#[derive(Debug, Args)]
#[command(
    after_help = "The seed is taken from --seed, then the config file, then the \
WIRECUT_SEED environment variable, then 0."
)]
struct ExperimentArgs {
    /// TOML file with any of: f_values, shot_grid, n_states, seed, mode, paired.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Overlap values, comma separated [default: 0.5,0.6,0.7,0.8,0.9,1.0]
    #[arg(long = "f", value_delimiter = ',', num_args = 1..)]
    f_values: Option<Vec<f64>>,
    /// Total shot budgets, comma separated, strictly increasing [default: 250,500,...,5000]
    #[arg(long = "shots", value_delimiter = ',', num_args = 1..)]
    shot_grid: Option<Vec<u64>>,
    /// Number of random input states [default: 1000]
    #[arg(long)]
    n_states: Option<usize>,
    /// Base seed [env: WIRECUT_SEED] [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Shot allocation: stratified or multinomial [default: stratified]
    #[arg(long)]
    mode: Option<EstimationMode>,
    /// Draw fresh input states for each f instead of reusing them [default: false]
    #[arg(long)]
    unpaired: bool,
    /// Use |0> as every input state (test hook) [default: false]
    #[arg(long)]
    force_identity_prep: bool,
    /// Worker threads, 0 for all cores [default: 0]
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Sweep CSV to read.
    #[arg(long = "in")]
    input: PathBuf,
    /// SVG path to write.
    #[arg(long)]
    out: PathBuf,
    /// Exit 1 unless the slope and f-ordering checks pass [default: false]
    #[arg(long)]
    assert: bool,
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Overhead(a) => overhead(a, out),
        Command::Decompose(a) => decompose(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Experiment(a) => experiment(a, out),
        Command::Plot(a) => plot(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            failure.code
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn runtime(e: impl ToString) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(e)
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn parse_k(k: f64) -> std::result::Result<NmeParameter, Failure> {
    NmeParameter::new(k).map_err(Failure::usage)
}

fn overhead(args: OverheadArgs, out: &mut dyn Write) -> CmdResult {
    let gamma = match (args.k, args.f) {
        (Some(k), None) => optimal_overhead_pure(parse_k(k)?),
        (None, Some(f)) => optimal_overhead(f).map_err(Failure::usage)?,
        _ => return Err(Failure::usage("exactly one of --k or --f is required")),
    };
    writeln!(out, "{}", sig12(gamma))?;
    Ok(EXIT_OK)
}

fn decompose(args: DecomposeArgs, out: &mut dyn Write) -> CmdResult {
    let qpd = nme_wire_cut(parse_k(args.k)?);
    writeln!(out, "{qpd}")?;
    Ok(EXIT_OK)
}

fn deviation_line(
    out: &mut dyn Write,
    label: &str,
    qpd: &QuasiProbDecomposition,
) -> std::result::Result<bool, Failure> {
    let deviation = qpd.identity_deviation();
    let ok = deviation <= RECONSTRUCTION_TOLERANCE;
    writeln!(
        out,
        "{label}\t{}\t{}",
        sig12(deviation),
        if ok { "ok" } else { "FAIL" }
    )?;
    Ok(ok)
}

fn verify(args: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let mut all_ok = true;
    if args.all {
        for i in 0..=10 {
            let k = NmeParameter::new(i as f64 / 10.0).expect("grid value is valid");
            all_ok &= deviation_line(out, &format!("k={}", k.k()), &nme_wire_cut(k))?;
        }
        all_ok &= deviation_line(out, "measure-prepare", &harada_wire_cut())?;
    } else if let Some(k) = args.k {
        let k = parse_k(k)?;
        all_ok &= deviation_line(out, &format!("k={}", k.k()), &nme_wire_cut(k))?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILURE })
}

fn seed_from_env() -> std::result::Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn experiment_config(args: &ExperimentArgs) -> std::result::Result<ExperimentConfig, Failure> {
    let (mut config, file_has_seed) = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| Failure::usage(Error::io(path, e)))?;
            let has_seed = toml::from_str::<toml::Table>(&text)
                .map(|t| t.contains_key("seed"))
                .unwrap_or(false);
            let config: ExperimentConfig = toml::from_str(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            (config, has_seed)
        }
        None => (ExperimentConfig::default(), false),
    };
    if let Some(v) = &args.f_values {
        config.f_values = v.clone();
    }
    if let Some(v) = &args.shot_grid {
        config.shot_grid = v.clone();
    }
    if let Some(v) = args.n_states {
        config.n_states = v;
    }
    if let Some(v) = args.mode {
        config.mode = v;
    }
    if args.unpaired {
        config.paired = false;
    }
    if args.force_identity_prep {
        config.force_identity_prep = true;
    }
    match args.seed {
        Some(seed) => config.seed = seed,
        None if !file_has_seed => {
            if let Some(seed) = seed_from_env()? {
                config.seed = seed;
            }
        }
        None => {}
    }
    config.validate().map_err(Failure::usage)?;
    Ok(config)
}

fn experiment(args: ExperimentArgs, out: &mut dyn Write) -> CmdResult {
    let config = experiment_config(&args)?;
    let records = if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(Failure::runtime)?
            .install(|| run_sweep(&config))
    } else {
        run_sweep(&config)
    }
    .map_err(Failure::runtime)?;
    write_csv(&records, &args.out).map_err(Failure::runtime)?;

    writeln!(
        out,
        "seed {}, {} states, mode {}, wrote {}",
        config.seed,
        config.n_states,
        config.mode,
        args.out.display()
    )?;
    let first = config.shot_grid[0];
    let last = *config.shot_grid.last().expect("grid is non-empty");
    writeln!(out, "f\tk\tkappa\terror@{first}\terror@{last}\tslope")?;
    for (f, series) in series_by_f(&records) {
        let k = k_from_f(f).map_err(Failure::runtime)?;
        let at = |shots: u64| {
            series
                .iter()
                .find(|r| r.shots == shots)
                .map(|r| sig12(r.avg_error))
                .unwrap_or_default()
        };
        let slope = loglog_slope(&series)
            .map(sig12)
            .unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{slope}",
            sig12(f),
            sig12(k.k()),
            sig12(optimal_overhead_pure(k)),
            at(first),
            at(last)
        )?;
    }
    Ok(EXIT_OK)
}

fn plot(args: PlotArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let records = read_csv(&args.input).map_err(Failure::usage)?;
    render_svg(&records, &args.out).map_err(|e| match e {
        Error::Io { .. } => Failure::runtime(e),
        other => Failure::usage(other),
    })?;
    writeln!(out, "wrote {}", args.out.display())?;
    if !args.assert {
        return Ok(EXIT_OK);
    }
    let checks = check_sweep(&records);
    let mut ok = !checks.is_empty();
    for check in &checks {
        ok &= check.passed;
        writeln!(
            out,
            "{}\t{}\t{}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        )?;
    }
    if checks.is_empty() {
        writeln!(
            err,
            "no checks apply: need at least two f values or shot budgets"
        )?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}
