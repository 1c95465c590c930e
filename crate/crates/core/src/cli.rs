//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 integration guard
//! failure, 4 uninformative data (rank-0 Gram, or any rank deficiency under
//! `--strict`), 5 verification tolerance exceeded under `--strict`. Every
//! failure prints one `{"error": .., "code": ..}` line on standard error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{polynomial_from_json, poles_from_json, ExperimentConfig};
use crate::error::Error;
use crate::exec::{self, Execution};
use crate::identify::{self, Estimator, GramSystem, IdentificationResult, TrajectoryDiagnostics};
use crate::json::{parse_complex, ComplexJson, PoleJson};
use crate::kernels::{self, KernelPoint};
use crate::occkernel::{self, AdjointRepresentative};
use crate::spectral;
use crate::symbols::{BlaschkeProduct, Polynomial, RationalSymbol};
use crate::trajectory::{self, simulate_rk4, Guards, Simulation, Trajectory};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_RANK: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "liouville-disk", version, about = "Occupation-kernel identification of rational dynamics on the unit disk")]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Turn warnings (guard trips, rank deficiency, failed checks) into errors.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads for the parallel loops.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate z' = p/q with RK4 and write CSV trajectories.
    Simulate(SimulateArgs),
    /// Learn F = B^2 f from trajectories by Gram-system regression.
    Identify(TrajArgs),
    /// Endpoint-difference least squares for f itself.
    Baseline(TrajArgs),
    /// Numerical checks of the adjoint and Leibniz identities.
    VerifyAdjoint,
    /// Finite-section eigenvalues of the restricted Liouville operator.
    ProbeSpectrum(ProbeArgs),
    /// Evaluate one of the reproducing kernels.
    KernelEval(KernelArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Numerator coefficients, JSON array of {re, im} (or numbers), ascending.
    #[arg(long)]
    pub p: Option<String>,
    /// Denominator coefficients; defaults to [1].
    #[arg(long)]
    pub q: Option<String>,
    /// Initial condition "re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<String>,
    #[arg(long = "T")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrajArgs {
    /// Trajectory CSV files or directories of them; when omitted the
    /// configuration's simulation block is integrated in memory.
    #[arg(long, num_args = 1..)]
    pub trajs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Section size.
    #[arg(long = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Szego,
    SzegoMixed,
    Derivative,
    Restricted,
    Dwbar,
    Mixed,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kind: KernelKind,
    /// Conjugate-slot point "re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub w: String,
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
    /// Derivative order for `--kind derivative`.
    #[arg(long, default_value_t = 0)]
    pub j: u32,
    /// Zeros of B as a JSON array of {re, im, mult}; defaults to the
    /// configuration's poles, else B = 1.
    #[arg(long)]
    pub zeros: Option<String>,
}

/// A failed command: exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::GuardTripped { .. } => EXIT_GUARD,
            Error::Trajectory { source, .. } if matches!(**source, Error::GuardTripped { .. }) => EXIT_GUARD,
            _ => EXIT_CONFIG,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses arguments, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                print!("{e}");
                return 0;
            }
            report_failure(&Failure::new(EXIT_CONFIG, e.to_string().trim().to_string()));
            return EXIT_CONFIG;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(f) => {
            report_failure(&f);
            f.code
        }
    }
}

fn report_failure(f: &Failure) {
    eprintln!("{}", json!({"error": f.message, "code": f.code}));
}

fn warn(message: impl Into<String>) {
    eprintln!("{}", json!({"warning": message.into()}));
}

pub fn run(cli: &Cli) -> CmdResult {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::new(EXIT_CONFIG, "--threads must be positive"));
        }
        exec::set_threads(t);
    }
    let config = match &cli.config {
        Some(path) => Some(
            ExperimentConfig::load(path)
                .map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(cli, config.as_ref(), args),
        Command::Identify(args) => cmd_identify(cli, require(config.as_ref())?, args),
        Command::Baseline(args) => cmd_baseline(cli, require(config.as_ref())?, args),
        Command::VerifyAdjoint => cmd_verify(cli, require(config.as_ref())?),
        Command::ProbeSpectrum(args) => cmd_probe(cli, require(config.as_ref())?, args),
        Command::KernelEval(args) => cmd_kernel(cli, config.as_ref(), args),
    }
}

fn require(config: Option<&ExperimentConfig>) -> std::result::Result<&ExperimentConfig, Failure> {
    config.ok_or_else(|| Failure::new(EXIT_CONFIG, "this command needs --config"))
}

fn config_err(message: impl Into<String>) -> Failure {
    Failure::new(EXIT_CONFIG, message)
}

/// Pretty JSON with a trailing newline, to `--out` or standard output.
fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| config_err(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| config_err(format!("{}: {e}", parent.display())))?;
            }
            fs::write(path, text).map_err(|e| config_err(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| config_err(e.to_string()))
        }
    }
}

/// Accepts `[{"re":..,"im":..}, ..]` or plain numbers.
fn parse_coeffs(text: &str) -> std::result::Result<Polynomial, Failure> {
    let value: Value = serde_json::from_str(text).map_err(|e| config_err(format!("bad coefficient array '{text}': {e}")))?;
    let items = value
        .as_array()
        .ok_or_else(|| config_err(format!("coefficients must be a JSON array, got '{text}'")))?;
    let mut coeffs = Vec::with_capacity(items.len());
    for item in items {
        let c = if let Some(x) = item.as_f64() {
            Complex64::new(x, 0.0)
        } else {
            let c: ComplexJson =
                serde_json::from_value(item.clone()).map_err(|e| config_err(format!("bad coefficient {item}: {e}")))?;
            c.into()
        };
        coeffs.push(c);
    }
    Ok(Polynomial::new(coeffs))
}

fn parse_point(text: &str) -> std::result::Result<Complex64, Failure> {
    parse_complex(text).map_err(config_err)
}

fn c_json(z: Complex64) -> ComplexJson {
    z.into()
}

#[derive(Serialize)]
struct SimulationSummary {
    index: usize,
    z0: ComplexJson,
    samples: usize,
    duration: f64,
    file: Option<String>,
    guard_trip: Option<GuardJson>,
}

#[derive(Serialize)]
struct GuardJson {
    at_time: f64,
    reason: String,
}

fn summarize(index: usize, z0: Complex64, sim: &Simulation, file: Option<String>) -> SimulationSummary {
    SimulationSummary {
        index,
        z0: c_json(z0),
        samples: sim.trajectory.len(),
        duration: sim.trajectory.duration(),
        file,
        guard_trip: sim.guard_trip.as_ref().map(|g| GuardJson {
            at_time: g.at_time,
            reason: g.reason.clone(),
        }),
    }
}

fn simulate_all(
    f: &RationalSymbol,
    starts: &[Complex64],
    t_end: f64,
    dt: f64,
    guards: Guards,
) -> std::result::Result<Vec<Simulation>, Failure> {
    Execution::default()
        .try_map(starts.len(), |k| {
            simulate_rk4(f, starts[k], t_end, dt, guards).map_err(|e| e.in_trajectory(k))
        })
        .map_err(Failure::from)
}

fn cmd_simulate(cli: &Cli, config: Option<&ExperimentConfig>, args: &SimulateArgs) -> CmdResult {
    let explicit = args.p.is_some() || args.z0.is_some() || args.t_end.is_some() || args.dt.is_some();
    if explicit {
        let (Some(p), Some(z0), Some(t_end), Some(dt)) = (&args.p, &args.z0, args.t_end, args.dt) else {
            return Err(config_err("simulate needs --p, --z0, --T and --dt together"));
        };
        let q = match &args.q {
            Some(q) => parse_coeffs(q)?,
            None => Polynomial::from_real(&[1.0]),
        };
        let f = RationalSymbol::from_polys(parse_coeffs(p)?, q)?;
        let z0 = parse_point(z0)?;
        let guards = config
            .and_then(|c| c.simulation.as_ref())
            .map(|s| s.guards())
            .unwrap_or_default();
        let sim = simulate_rk4(&f, z0, t_end, dt, guards)?;
        let csv = trajectory::to_csv_string(&sim.trajectory);
        match &cli.out {
            Some(path) => {
                fs::write(path, csv).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                emit(None, &json!({"trajectories": [summarize(0, z0, &sim, Some(path.display().to_string()))]}))?;
            }
            None => print!("{csv}"),
        }
        return guard_outcome(cli.strict, std::slice::from_ref(&sim));
    }

    let cfg = require(config)?;
    let f = cfg.symbol()?;
    let sim_cfg = cfg.simulation()?;
    let starts = sim_cfg.starts();
    let sims = simulate_all(&f, &starts, sim_cfg.t_end, sim_cfg.dt, sim_cfg.guards())?;
    let dir = cli
        .out
        .as_ref()
        .ok_or_else(|| config_err("simulate --config needs --out <directory>"))?;
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| config_err(format!("{}: {e}", plots.display())))?;
    let pole_points: Vec<Complex64> = f.poles().iter().map(|r| r.location).collect();
    let mut summary = Vec::with_capacity(sims.len());
    for (k, sim) in sims.iter().enumerate() {
        let file = dir.join(format!("traj_{k:03}.csv"));
        trajectory::write_csv(&sim.trajectory, &file)?;
        if !pole_points.is_empty() {
            let dist = plots.join(format!("pole_distance_{k:03}.csv"));
            fs::write(&dist, trajectory::distance_csv_string(&sim.trajectory, &pole_points))
                .map_err(|e| config_err(format!("{}: {e}", dist.display())))?;
        }
        summary.push(summarize(k, starts[k], sim, Some(file.display().to_string())));
    }
    emit(None, &json!({"trajectories": summary}))?;
    guard_outcome(cli.strict, &sims)
}

fn guard_outcome(strict: bool, sims: &[Simulation]) -> CmdResult {
    let tripped: Vec<usize> = sims
        .iter()
        .enumerate()
        .filter(|(_, s)| s.guard_trip.is_some())
        .map(|(k, _)| k)
        .collect();
    if tripped.is_empty() {
        return Ok(());
    }
    let message = format!("guard tripped on trajectories {tripped:?}; trajectories were truncated");
    if strict {
        Err(Failure::new(EXIT_GUARD, message))
    } else {
        warn(message);
        Ok(())
    }
}

/// Files named directly, plus every `*.csv` directly inside named directories
/// (sorted by name).
pub fn collect_trajectory_files(paths: &[PathBuf]) -> std::result::Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else if path.is_file() {
            files.push(path.clone());
        } else {
            return Err(config_err(format!("{} does not exist", path.display())));
        }
    }
    if files.is_empty() {
        return Err(config_err("no trajectory files found"));
    }
    Ok(files)
}

fn load_trajectories(cfg: &ExperimentConfig, args: &TrajArgs) -> std::result::Result<Vec<Trajectory>, Failure> {
    if args.trajs.is_empty() {
        let f = cfg.symbol()?;
        let sim_cfg = cfg.simulation()?;
        let sims = simulate_all(&f, &sim_cfg.starts(), sim_cfg.t_end, sim_cfg.dt, sim_cfg.guards())?;
        for (k, s) in sims.iter().enumerate() {
            if let Some(g) = &s.guard_trip {
                warn(format!("trajectory {k} truncated at t = {}: {}", g.at_time, g.reason));
            }
        }
        return Ok(sims.into_iter().map(|s| s.trajectory).collect());
    }
    collect_trajectory_files(&args.trajs)?
        .iter()
        .map(|p| trajectory::read_csv(p).map_err(|e| config_err(format!("{}: {e}", p.display()))))
        .collect()
}

#[derive(Serialize)]
struct GramJson {
    hermitian: bool,
    min_eigenvalue: f64,
    trace: f64,
}

#[derive(Serialize)]
struct IdentifyOutput<'a> {
    #[serde(flatten)]
    result: &'a IdentificationResult,
    dictionary: Vec<String>,
    per_trajectory_diagnostics: &'a [TrajectoryDiagnostics],
    gram: GramJson,
}

fn rank_outcome(strict: bool, rank: usize, m: usize) -> CmdResult {
    if rank == 0 {
        return Err(Failure::new(EXIT_RANK, "the system has rank 0; the data are uninformative"));
    }
    if rank < m {
        let message = format!("rank-deficient system (rank {rank} of {m}); the minimum-norm solution was reported");
        if strict {
            return Err(Failure::new(EXIT_RANK, message));
        }
        warn(message);
    }
    Ok(())
}

/// Velocities for the data-integral estimator.
fn velocities(cfg: &ExperimentConfig, trajs: &[Trajectory]) -> std::result::Result<Vec<Vec<Complex64>>, Failure> {
    if cfg.exact_velocity {
        let f = cfg.symbol()?;
        trajs
            .iter()
            .enumerate()
            .map(|(k, t)| trajectory::exact_velocity(t, &f).map_err(|e| Failure::from(e.in_trajectory(k))))
            .collect()
    } else {
        Ok(trajs.iter().map(trajectory::velocity_estimate).collect())
    }
}

pub fn run_identification(
    cfg: &ExperimentConfig,
    trajs: &[Trajectory],
    estimator: Estimator,
) -> std::result::Result<(IdentificationResult, GramSystem), Failure> {
    let b = cfg.blaschke()?;
    let dict = cfg.dictionary()?;
    let vel = match estimator {
        Estimator::DataIntegral => Some(velocities(cfg, trajs)?),
        _ => None,
    };
    Ok(identify::identify(
        &b,
        &dict,
        trajs,
        vel.as_deref(),
        cfg.rule,
        estimator,
        cfg.svd_rel_tol,
        cfg.real_theta,
        Execution::default(),
    )?)
}

fn cmd_identify(cli: &Cli, cfg: &ExperimentConfig, args: &TrajArgs) -> CmdResult {
    let trajs = load_trajectories(cfg, args)?;
    let (result, system) = run_identification(cfg, &trajs, cfg.estimator)?;
    let dict = cfg.dictionary()?;
    let output = IdentifyOutput {
        result: &result,
        dictionary: dict.entries().iter().map(|e| e.to_string()).collect(),
        per_trajectory_diagnostics: &system.diagnostics,
        gram: GramJson {
            hermitian: system.is_hermitian(),
            min_eigenvalue: system.min_eigenvalue(),
            trace: system.trace(),
        },
    };
    emit(cli.out.as_deref(), &output)?;
    rank_outcome(cli.strict, result.rank, dict.len())
}

fn cmd_baseline(cli: &Cli, cfg: &ExperimentConfig, args: &TrajArgs) -> CmdResult {
    let trajs = load_trajectories(cfg, args)?;
    let dict = cfg.dictionary()?;
    let result = identify::baseline_identify_tol(&trajs, &dict, cfg.windows, cfg.rule, cfg.svd_rel_tol)?;
    emit(
        cli.out.as_deref(),
        &json!({
            "theta": result.theta.iter().map(|z| c_json(*z)).collect::<Vec<_>>(),
            "rank": result.rank,
            "singular_values": result.singular_values,
            "residual": result.residual,
            "dictionary": dict.entries().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "equations": trajs.len() * cfg.windows,
        }),
    )?;
    rank_outcome(cli.strict, result.rank, dict.len())
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `None` for informational entries.
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl Check {
    fn asserted(name: String, value: f64, tolerance: f64, detail: Value) -> Self {
        Self {
            name,
            value,
            tolerance: Some(tolerance),
            pass: Some(value < tolerance),
            detail,
        }
    }

    fn info(name: String, value: f64, detail: Value) -> Self {
        Self {
            name,
            value,
            tolerance: None,
            pass: None,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub all_pass: bool,
    pub trajectory: Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Value>,
}

fn poly_label(g: &Polynomial) -> String {
    g.to_string()
}

/// Runs the verification battery described by the configuration.
pub fn verify_battery(cfg: &ExperimentConfig) -> std::result::Result<VerifyReport, Failure> {
    let v = cfg.verify()?;
    let f = cfg.symbol()?;
    let b = cfg.blaschke()?;
    let generator = match &v.trajectory_symbol {
        Some(s) => s.build(None, cfg.pole_margin)?,
        None => f.clone(),
    };
    let z0: Complex64 = v.z0.into();
    let guards = cfg.simulation.as_ref().map(|s| s.guards()).unwrap_or_default();
    let coarse = simulate_rk4(&generator, z0, v.t_end, v.dt, guards)?;
    let fine = simulate_rk4(&generator, z0, v.t_end, v.dt / 2.0, guards)?;
    let traj = &coarse.trajectory;

    let mut checks = Vec::new();
    for coeffs in &v.g {
        let g = polynomial_from_json(coeffs);
        let r = occkernel::verify_adjoint_identity(&b, &f, traj, &g, cfg.rule)?;
        let r_half = occkernel::verify_adjoint_identity(&b, &f, &fine.trajectory, &g, cfg.rule)?;
        checks.push(Check::asserted(
            format!("adjoint_identity g = {}", poly_label(&g)),
            r,
            v.tolerance,
            json!({"residual_half_dt": r_half, "ratio": r / r_half}),
        ));
    }

    let ex = cfg.extractor()?;
    for case in &v.leibniz {
        let g = polynomial_from_json(&case.g);
        let rep = occkernel::verify_leibniz_pairing(&b, &f, &g, case.w.into(), case.j, &ex)?;
        checks.push(Check::asserted(
            format!("leibniz j = {} g = {}", case.j, poly_label(&g)),
            rep.residual,
            v.leibniz_tolerance,
            serde_json::to_value(rep).map_err(|e| config_err(e.to_string()))?,
        ));
    }

    if !v.representative_points.is_empty() {
        let rep = AdjointRepresentative::from_symbol(b.clone(), traj.clone(), |z| f.eval(z), cfg.rule)?;
        for point in &v.representative_points {
            let z: Complex64 = (*point).into();
            let integral = rep.eval(z);
            let thm43 = occkernel::adjoint_endpoint(&b, traj.first(), traj.last(), z);
            let unweighted = occkernel::adjoint_endpoint_unweighted(&b, traj.first(), traj.last(), z);
            checks.push(Check::info(
                format!("representative z = {z}"),
                (integral - thm43).norm(),
                json!({
                    "integral": c_json(integral),
                    "endpoint_kernel_difference": c_json(thm43),
                    "endpoint_unweighted": c_json(unweighted),
                    "unweighted_discrepancy": (integral - unweighted).norm(),
                }),
            ));
        }
    }

    let estimators = if v.compare_estimators {
        Some(compare_estimators(cfg)?)
    } else {
        None
    };

    Ok(VerifyReport {
        all_pass: checks.iter().all(|c| c.pass != Some(false)),
        trajectory: json!({
            "z0": c_json(z0),
            "samples": traj.len(),
            "dt": traj.dt(),
            "meta": traj.meta(),
            "guard_trip": coarse.guard_trip.as_ref().map(|g| g.at_time),
        }),
        checks,
        estimators,
    })
}

/// Solves with every right-hand-side estimator on the simulation block.
pub fn compare_estimators(cfg: &ExperimentConfig) -> std::result::Result<Value, Failure> {
    let f = cfg.symbol()?;
    let sim_cfg = cfg.simulation()?;
    let trajs: Vec<Trajectory> = simulate_all(&f, &sim_cfg.starts(), sim_cfg.t_end, sim_cfg.dt, sim_cfg.guards())?
        .into_iter()
        .map(|s| s.trajectory)
        .collect();
    let mut thetas = Vec::new();
    for est in [Estimator::DataIntegral, Estimator::EndpointThm43, Estimator::EndpointSec7] {
        let (r, _) = run_identification(cfg, &trajs, est)?;
        thetas.push((est, r));
    }
    let base = &thetas[0].1.theta;
    let gap = |t: &[Complex64]| t.iter().zip(base).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let mut out = serde_json::Map::new();
    for (est, r) in &thetas {
        out.insert(
            est.name().to_string(),
            json!({
                "theta": r.theta.iter().map(|z| c_json(*z)).collect::<Vec<_>>(),
                "rank": r.rank,
                "residual": r.residual,
                "max_abs_gap_to_data_integral": gap(&r.theta),
            }),
        );
    }
    Ok(Value::Object(out))
}

fn cmd_verify(cli: &Cli, cfg: &ExperimentConfig) -> CmdResult {
    let report = verify_battery(cfg)?;
    emit(cli.out.as_deref(), &report)?;
    if !report.all_pass {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.pass == Some(false))
            .map(|c| c.name.as_str())
            .collect();
        let message = format!("checks above tolerance: {failed:?}");
        if cli.strict {
            return Err(Failure::new(EXIT_VERIFY, message));
        }
        warn(message);
    }
    Ok(())
}

fn cmd_probe(cli: &Cli, cfg: &ExperimentConfig, args: &ProbeArgs) -> CmdResult {
    let f = cfg.symbol()?;
    let b = cfg.blaschke()?;
    let probe = spectral::probe_spectrum(&b, &f, args.n, &cfg.extractor()?)?;
    emit(cli.out.as_deref(), &probe)
}

fn cmd_kernel(cli: &Cli, config: Option<&ExperimentConfig>, args: &KernelArgs) -> CmdResult {
    let point = KernelPoint::new(parse_point(&args.w)?, parse_point(&args.z)?)?;
    let b = match (&args.zeros, config) {
        (Some(text), _) => {
            let zeros: Vec<PoleJson> =
                serde_json::from_str(text).map_err(|e| config_err(format!("bad --zeros '{text}': {e}")))?;
            BlaschkeProduct::new(poles_from_json(&zeros))?
        }
        (None, Some(cfg)) if cfg.poles.is_some() || cfg.symbol.is_some() => cfg.blaschke()?,
        _ => BlaschkeProduct::trivial(),
    };
    let (w, z) = (point.w, point.z);
    let value = match args.kind {
        KernelKind::Szego => kernels::szego(w, z),
        KernelKind::SzegoMixed => kernels::szego_mixed(w, z),
        KernelKind::Derivative => kernels::derivative_kernel(w, args.j, z),
        KernelKind::Restricted => kernels::restricted_kernel(&b, w, z),
        KernelKind::Dwbar => kernels::restricted_kernel_dwbar(&b, w, z),
        KernelKind::Mixed => kernels::restricted_kernel_mixed(&b, w, z),
    };
    emit(
        cli.out.as_deref(),
        &json!({
            "kind": format!("{:?}", args.kind).to_lowercase(),
            "w": c_json(w),
            "z": c_json(z),
            "j": args.j,
            "value": c_json(value),
        }),
    )
}
