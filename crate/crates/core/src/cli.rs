//! Command-line front end.
//!
//! Every subcommand prints its primary result to stdout (JSON, or CSV for
//! `trajectory`/`montecarlo` without `--csv`) and a [`RunManifest`] to
//! `--manifest` or, by default, stderr. Floats in JSON carry 12 significant
//! digits; CSV floats use the shortest round-trip form.
//!
//! Exit codes: 0 success, 1 domain error (unphysical state, failed
//! precondition, resource limit), 2 usage or input-format error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::decompose::{hosvd_bloch, is_hosvd_diagonal};
use crate::discord::{self, MethodChoice, HOSVD_DIAGONAL_TOL};
use crate::dynamics::{self, DetectorConfig, TrajectoryConfig};
use crate::io::{self, round_json};
use crate::maxsat::{self, SatInstance};
use crate::montecarlo::{self, McConfig};
use crate::qstate::{bloch_from_density, density_from_bloch, physicality, MeasurementFrame};
use crate::tensor_norm::{self, OptimizerConfig};
use crate::{Error, Result};

const SIG_DIGITS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "bloch-discord", version, arg_required_else_help = true, about = "Global and geometric quantum discord via generalized Bloch tensors")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "DISCORD_THREADS")]
    threads: Option<usize>,
    /// Write the run manifest here instead of stderr.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// GGQD and GQD of a restricted Bloch tensor.
    Discord(DiscordArgs),
    /// Maximal correlation C over measurement frames (injective norm).
    Norm(NormArgs),
    /// Phase-flip trajectory with transition detection.
    Trajectory(TrajectoryArgs),
    /// MAX-SAT through the multilinear energy encoding.
    Maxsat(MaxsatArgs),
    /// Near-crossing probabilities for Haar-random states.
    Montecarlo(McArgs),
    /// Higher-order SVD of a restricted Bloch tensor.
    Hosvd(InputArg),
    /// Convert between density-matrix and Bloch-tensor JSON.
    Convert(ConvertArgs),
}

#[derive(Debug, Args, Serialize)]
struct InputArg {
    /// Input JSON file.
    input: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DiscordMethod {
    Auto,
    Exact2,
    Hosvd,
    Meanfield,
    Bruteforce,
}

impl From<DiscordMethod> for MethodChoice {
    fn from(m: DiscordMethod) -> Self {
        match m {
            DiscordMethod::Auto => MethodChoice::Auto,
            DiscordMethod::Exact2 => MethodChoice::Exact2,
            DiscordMethod::Hosvd => MethodChoice::Hosvd,
            DiscordMethod::Meanfield => MethodChoice::Meanfield,
            DiscordMethod::Bruteforce => MethodChoice::Bruteforce,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct OptimizerArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Damping factor in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Random starting frames in addition to the axis-aligned ones.
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    no_axis_seeds: bool,
    /// Polar grid points per site for brute force.
    #[arg(long, default_value_t = 30)]
    grid_steps: usize,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            alpha: self.alpha,
            max_iterations: self.max_iterations,
            convergence_tol: self.tol,
            restarts: self.restarts,
            seed: self.seed,
            include_axis_seeds: !self.no_axis_seeds,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct DiscordArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = DiscordMethod::Auto)]
    method: DiscordMethod,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum NormMethod {
    Meanfield,
    Bruteforce,
    Exact2,
}

#[derive(Debug, Args, Serialize)]
struct NormArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = NormMethod::Meanfield)]
    method: NormMethod,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Debug, Args, Serialize)]
struct TrajectoryArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pmax: f64,
    #[arg(long, default_value_t = dynamics::DEFAULT_POINTS)]
    points: usize,
    #[arg(long, default_value_t = dynamics::DEFAULT_GAP_TOL)]
    gap_tol: f64,
    /// Defaults to five times the median |second difference| of D_GG per grid step.
    #[arg(long)]
    slope_tol: Option<f64>,
    #[arg(long)]
    with_gqd: bool,
    /// Write the CSV here; the transition report then goes to stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DiscordMethod::Auto)]
    method: DiscordMethod,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Debug, Args, Serialize)]
struct MaxsatArgs {
    /// DIMACS CNF file.
    input: PathBuf,
    /// Exhaustive search (default).
    #[arg(long, conflicts_with = "tensor")]
    oracle: bool,
    /// Sign-constrained mean-field search on the encoded tensor.
    #[arg(long)]
    tensor: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
}

#[derive(Debug, Args, Serialize)]
struct McArgs {
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,0.8,0.6")]
    spectrum: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.05,0.1,0.2")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = dynamics::DEFAULT_POINTS)]
    points: usize,
    /// Write the CSV here; the report then goes to stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Target {
    Bloch,
    Density,
}

#[derive(Debug, Args, Serialize)]
struct ConvertArgs {
    input: PathBuf,
    /// Output format; the input is the other one.
    #[arg(long, value_enum)]
    to: Target,
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// SHA-256 of each input file, keyed by path.
    pub input_digests: BTreeMap<String, String>,
    pub threads: Option<usize>,
    pub duration_seconds: f64,
}

fn read_input(path: &Path, digests: &mut BTreeMap<String, String>) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    digests.insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
    String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))
}

fn frame_json(frame: &MeasurementFrame) -> Value {
    json!(frame.sites())
}

struct Outcome {
    /// JSON result, or `None` when stdout carried CSV.
    json: Option<Value>,
    /// CSV to print when no file was requested.
    stdout_csv: Option<Vec<u8>>,
    seed: Option<u64>,
    config: Value,
    /// Data files keep full round-trip precision instead of 12 digits.
    exact: bool,
}

fn run_discord(a: &DiscordArgs, digests: &mut BTreeMap<String, String>) -> Result<Outcome> {
    let n = io::parse_bloch_json(&read_input(&a.input, digests)?)?;
    let r = discord::compute(&n, a.method.into(), &a.optimizer.config(), a.optimizer.grid_steps)?;
    Ok(Outcome {
        json: Some(json!({
            "ggqd": r.ggqd,
            "gqd": r.gqd,
            "max_C": r.max_c,
            "frame": frame_json(&r.optimal_frame),
            "method": r.method,
        })),
        stdout_csv: None,
        seed: Some(a.optimizer.seed),
        config: serde_json::to_value(a).expect("serializable"),
        exact: false,
    })
}

fn run_norm(a: &NormArgs, digests: &mut BTreeMap<String, String>) -> Result<Outcome> {
    let n = io::parse_bloch_json(&read_input(&a.input, digests)?)?;
    let r = match a.method {
        NormMethod::Meanfield => tensor_norm::injective_norm_meanfield(&n, &a.optimizer.config())?,
        NormMethod::Bruteforce => tensor_norm::injective_norm_bruteforce(&n, a.optimizer.grid_steps)?,
        NormMethod::Exact2 => tensor_norm::injective_norm_exact2(&n)?,
    };
    Ok(Outcome {
        json: Some(json!({
            "value": r.value,
            "frame": frame_json(&r.frame),
            "iterations_used": r.iterations_used,
            "converged": r.converged,
            "restart_index": r.restart_index,
            "method": a.method,
        })),
        stdout_csv: None,
        seed: Some(a.optimizer.seed),
        config: serde_json::to_value(a).expect("serializable"),
        exact: false,
    })
}

fn run_trajectory(a: &TrajectoryArgs, digests: &mut BTreeMap<String, String>) -> Result<Outcome> {
    let n = io::parse_bloch_json(&read_input(&a.input, digests)?)?;
    let grid = dynamics::uniform_grid(a.pmax, a.points)?;
    let config = TrajectoryConfig {
        with_gqd: a.with_gqd,
        method: a.method.into(),
        optimizer: a.optimizer.config(),
        grid_steps: a.optimizer.grid_steps,
    };
    let traj = dynamics::compute_trajectory(&n, &grid, &config)?;
    let report = dynamics::detect_transition(&traj, &DetectorConfig { gap_tol: a.gap_tol, slope_tol: a.slope_tol })?;
    let mut csv = Vec::new();
    io::write_trajectory_csv(&traj, &mut csv)?;
    let report = serde_json::to_value(&report).expect("serializable");
    let (json, stdout_csv) = match &a.csv {
        Some(path) => {
            fs::write(path, &csv)?;
            (Some(report), None)
        }
        None => {
            eprintln!("{}", rounded(report));
            (None, Some(csv))
        }
    };
    Ok(Outcome {
        json,
        stdout_csv,
        seed: Some(a.optimizer.seed),
        config: serde_json::to_value(a).expect("serializable"),
        exact: false,
    })
}

fn run_maxsat(a: &MaxsatArgs, digests: &mut BTreeMap<String, String>) -> Result<Outcome> {
    let inst = SatInstance::parse_dimacs(&read_input(&a.input, digests)?)?;
    let energy = maxsat::encode(&inst)?;
    let literals = |assignment: &[bool]| -> Vec<i64> {
        assignment
            .iter()
            .enumerate()
            .map(|(j, &t)| if t { j as i64 + 1 } else { -(j as i64 + 1) })
            .collect()
    };
    let (max_satisfied, assignments, solver) = if a.tensor {
        let cfg = OptimizerConfig { restarts: a.restarts.max(1), seed: a.seed, ..Default::default() };
        let r = maxsat::solve_via_tensor(&inst, &cfg)?;
        (r.max_satisfied, vec![literals(&r.assignment)], "tensor")
    } else {
        let r = maxsat::solve_bruteforce(&inst)?;
        (r.max_satisfied, r.maximizers.iter().map(|m| literals(m)).collect(), "oracle")
    };
    let coefficients: Vec<Value> = energy
        .coeffs
        .iter()
        .map(|(vars, c)| json!({"vars": vars, "value": -c}))
        .collect();
    Ok(Outcome {
        json: Some(json!({
            "max_satisfied": max_satisfied,
            "assignments": assignments,
            "energy_constant": energy.energy_constant(),
            "coefficients": coefficients,
            "solver": solver,
        })),
        stdout_csv: None,
        seed: a.tensor.then_some(a.seed),
        config: serde_json::to_value(a).expect("serializable"),
        exact: false,
    })
}

fn run_montecarlo(a: &McArgs, threads: Option<usize>) -> Result<Outcome> {
    let spectrum: [f64; 3] = a
        .spectrum
        .as_slice()
        .try_into()
        .map_err(|_| Error::Argument(format!("spectrum needs 3 values, got {}", a.spectrum.len())))?;
    let config = McConfig {
        n_qubits: a.qubits,
        spectrum,
        samples: a.samples,
        epsilons: a.epsilons.clone(),
        seed: a.seed,
        grid_points: a.points,
        threads,
    };
    let report = montecarlo::estimate_probability(&config)?;
    let mut csv = Vec::new();
    io::write_mc_csv(&report, &mut csv)?;
    let report = serde_json::to_value(&report).expect("serializable");
    let (json, stdout_csv) = match &a.csv {
        Some(path) => {
            fs::write(path, &csv)?;
            (Some(report), None)
        }
        None => {
            eprintln!("{}", rounded(report));
            (None, Some(csv))
        }
    };
    Ok(Outcome {
        json,
        stdout_csv,
        seed: Some(a.seed),
        config: serde_json::to_value(&config).expect("serializable"),
        exact: false,
    })
}

fn run_hosvd(a: &InputArg, digests: &mut BTreeMap<String, String>) -> Result<Outcome> {
    let n = io::parse_bloch_json(&read_input(&a.input, digests)?)?;
    let t = hosvd_bloch(&n)?;
    let factors: Vec<Vec<[f64; 3]>> = t
        .factors
        .iter()
        .map(|r| (0..3).map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]).collect())
        .collect();
    Ok(Outcome {
        json: Some(json!({
            "order": t.order,
            "superdiagonal": t.superdiagonal(),
            "diagonal": is_hosvd_diagonal(&t, HOSVD_DIAGONAL_TOL),
            "off_diagonal_max": t.off_diagonal_max(),
            "factors": factors,
            "core": t.core,
        })),
        stdout_csv: None,
        seed: None,
        config: serde_json::to_value(a).expect("serializable"),
        exact: false,
    })
}

fn run_convert(a: &ConvertArgs, digests: &mut BTreeMap<String, String>) -> Result<Outcome> {
    let text = read_input(&a.input, digests)?;
    let out = match a.to {
        Target::Bloch => io::bloch_to_json(&bloch_from_density(&io::parse_density_json(&text)?)?),
        Target::Density => {
            let n = io::parse_bloch_json(&text)?;
            let (ok, min) = physicality(&n);
            if !ok {
                return Err(Error::InvalidState(format!(
                    "tensor is unphysical (minimum eigenvalue {min:e})"
                )));
            }
            io::density_to_json(&density_from_bloch(&n))
        }
    };
    Ok(Outcome {
        json: Some(out),
        stdout_csv: None,
        seed: None,
        config: serde_json::to_value(a).expect("serializable"),
        exact: true,
    })
}

fn rounded(mut v: Value) -> Value {
    round_json(&mut v, SIG_DIGITS);
    v
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidState(_) | Error::Precondition(_) | Error::Inconsistency(_) | Error::ResourceLimit(_) => 1,
        Error::Argument(_) | Error::Parse(_) | Error::Io(_) => 2,
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let mut digests = BTreeMap::new();
    let (name, outcome) = {
        let mut work = || -> Result<(&str, Outcome)> {
            Ok(match &cli.command {
                Command::Discord(a) => ("discord", run_discord(a, &mut digests)?),
                Command::Norm(a) => ("norm", run_norm(a, &mut digests)?),
                Command::Trajectory(a) => ("trajectory", run_trajectory(a, &mut digests)?),
                Command::Maxsat(a) => ("maxsat", run_maxsat(a, &mut digests)?),
                Command::Montecarlo(a) => ("montecarlo", run_montecarlo(a, cli.threads)?),
                Command::Hosvd(a) => ("hosvd", run_hosvd(a, &mut digests)?),
                Command::Convert(a) => ("convert", run_convert(a, &mut digests)?),
            })
        };
        match cli.threads {
            Some(0) => return Err(Error::Argument("--threads must be positive".into())),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::ResourceLimit(format!("thread pool: {e}")))?
                .install(work)?,
            None => work()?,
        }
    };

    if let Some(csv) = &outcome.stdout_csv {
        std::io::stdout().write_all(csv)?;
    }
    if let Some(v) = outcome.json {
        let v = if outcome.exact { v } else { rounded(v) };
        let text = format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable"));
        match &cli.output {
            Some(path) => fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
    }
    let manifest = RunManifest {
        subcommand: name.to_string(),
        config: outcome.config,
        seed: outcome.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        input_digests: digests,
        threads: cli.threads,
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    match &cli.manifest {
        Some(path) => fs::write(path, text + "\n")?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the subcommand; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
