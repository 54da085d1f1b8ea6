//! Experiment CLI: run the stochastic (proximal) subgradient method on the
//! testbed, integrate subgradient flows, and verify campaigns of empirical
//! checks against frozen thresholds.
//!
//! Exit codes: 0 success, 2 config error, 3 boundedness guard tripped,
//! 4 unsupported prox combination, 5 failed verdict.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsopt_core::error::Error as CoreError;
use nsopt_core::flow::{
    check_descent_identity, integrate_composite_flow, integrate_flow, FlowOptions,
};
use nsopt_core::harness::{calibrate, run_campaign, Campaign, Thresholds};
use nsopt_core::solver::{run_prox_sgm, run_sgm, RunConfig, RunLog, RunStatus};
use nsopt_core::testbed::{self, ProblemKind};
use nsopt_core::Point;

use config::{resolve, EffectiveConfig, FileConfig, Overrides, OUTPUT_DIR_ENV};

const DEFAULT_CAMPAIGN: &str = include_str!("../../../campaigns/default.toml");
const FROZEN_THRESHOLDS: &str = include_str!("../../../campaigns/thresholds.json");

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_UNBOUNDED: u8 = 3;
const EXIT_UNSUPPORTED_PROX: u8 = 4;
const EXIT_FAILED_VERDICT: u8 = 5;

#[derive(Parser)]
#[command(
    name = "nsopt",
    about = "Stochastic subgradient experiments on nonsmooth nonconvex testbed problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stochastic subgradient method (or its proximal extension).
    Run(RunArgs),
    /// Integrate the subgradient flow (or the composite prox flow).
    Flow(FlowArgs),
    /// Run a verification campaign and print the verdict table.
    Verify(VerifyArgs),
    /// Calibrate regression thresholds and write them to a JSON file.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Iteration budget.
    #[arg(long = "K")]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated start, or "default".
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    stride: Option<usize>,
    /// Boundedness guard radius.
    #[arg(long)]
    guard: Option<f64>,
    /// Schedule form: polynomial | constant-then-decay | table.
    #[arg(long)]
    form: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Noise tag: zero | gaussian | bounded-uniform | state-scaled.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated start, or "default".
    #[arg(long)]
    z0: Option<String>,
    /// Horizon.
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    /// Integrator step.
    #[arg(long = "h", default_value_t = 1e-4)]
    step: f64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Campaign TOML; defaults to the shipped campaign.
    #[arg(long)]
    campaign: Option<PathBuf>,
    /// Run config whose `campaign` key names the campaign file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Thresholds JSON; defaults to the frozen shipped thresholds.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Directory for verdict reports and per-run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Campaign TOML defining the problems/grids to calibrate on.
    #[arg(long)]
    campaign: Option<PathBuf>,
    /// Output JSON path.
    #[arg(long, default_value = "thresholds.json")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Flow(args) => cmd_flow(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Calibrate(args) => cmd_calibrate(args),
    };
    ExitCode::from(code)
}

fn fail(code: u8, msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {}", msg);
    code
}

fn core_exit(e: &CoreError) -> u8 {
    match e {
        CoreError::UnsupportedProx { .. } => EXIT_UNSUPPORTED_PROX,
        _ => EXIT_CONFIG,
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, String> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {}", p.display(), e))?;
            FileConfig::parse(&text)
        }
    }
}

fn cmd_run(args: RunArgs) -> u8 {
    let file = match load_file_config(args.config.as_deref()) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let overrides = Overrides {
        problem: args.problem,
        budget: args.budget,
        seed: args.seed,
        x0: args.x0,
        out: args.out,
        guard: args.guard,
        stride: args.stride,
        form: args.form,
        c: args.c,
        gamma: args.gamma,
        noise: args.noise,
        sigma: args.sigma,
        radius: args.radius,
    };
    let eff = match resolve(file, &overrides) {
        Ok(e) => e,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let problem = testbed::by_name(&eff.problem).expect("resolved");
    let cfg = match RunConfig::new(
        eff.schedule.clone(),
        eff.noise.clone(),
        eff.budget,
        eff.seed,
        Point::new(eff.x0.clone()),
    ) {
        Ok(c) => c.with_stride(eff.log_stride).with_guard(eff.guard_radius),
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let log = match &problem.kind {
        ProblemKind::Plain(f) => run_sgm(f, &cfg),
        ProblemKind::Composite(p) => run_prox_sgm(p, &cfg),
    };
    let log = match log {
        Ok(l) => l,
        Err(e) => return fail(core_exit(&e), e),
    };
    if let Err(e) = write_run_artifacts(&eff, &log) {
        return fail(EXIT_CONFIG, e);
    }
    println!(
        "run {}: {} iterations, f = {}, status = {:?}, artifacts in {}",
        eff.problem,
        log.final_k(),
        log.last().f,
        log.status,
        eff.output_dir
    );
    if log.status == RunStatus::UnboundedIterates {
        return fail(
            EXIT_UNBOUNDED,
            "unbounded-iterates: the boundedness guard tripped (log retained)",
        );
    }
    EXIT_OK
}

fn write_run_artifacts(eff: &EffectiveConfig, log: &RunLog) -> Result<(), String> {
    let dir = Path::new(&eff.output_dir);
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let stem = format!("{}-seed{}", eff.problem, eff.seed);
    std::fs::write(dir.join(format!("{}.csv", stem)), log.csv_bytes())
        .map_err(|e| e.to_string())?;
    std::fs::write(
        dir.join(format!("{}-summary.json", stem)),
        serde_json::to_string_pretty(&log.summary()).expect("summary"),
    )
    .map_err(|e| e.to_string())?;
    std::fs::write(
        dir.join(format!("{}-config.toml", stem)),
        toml::to_string(eff).expect("config serializes"),
    )
    .map_err(|e| e.to_string())?;
    Ok(())
}

fn cmd_flow(args: FlowArgs) -> u8 {
    let file = match load_file_config(args.config.as_deref()) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let problem_name = match args.problem.or(file.problem.clone()) {
        Some(p) => p,
        None => return fail(EXIT_CONFIG, "no problem selected"),
    };
    let problem = match testbed::by_name(&problem_name) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let z0 = match &args.z0 {
        None => problem.default_x0.clone(),
        Some(text) => match config::parse_x0(text) {
            Ok(config::X0Spec::Vector(v)) => Point::new(v),
            Ok(config::X0Spec::Named(_)) => problem.default_x0.clone(),
            Err(e) => return fail(EXIT_CONFIG, e),
        },
    };
    if z0.dim() != problem.dim() {
        return fail(
            EXIT_CONFIG,
            format!("z0 has dimension {}, problem needs {}", z0.dim(), problem.dim()),
        );
    }
    let opts = FlowOptions::new(args.horizon).with_step(args.step);
    let traj = match &problem.kind {
        ProblemKind::Plain(f) => integrate_flow(f, &z0, opts),
        ProblemKind::Composite(p) => integrate_composite_flow(p, &z0, opts),
    };
    let traj = match traj {
        Ok(t) => t,
        Err(e) => return fail(core_exit(&e), e),
    };
    let out = std::env::var(OUTPUT_DIR_ENV)
        .ok()
        .or(args.out)
        .or(file.output_dir)
        .unwrap_or_else(|| config::DEFAULT_OUTPUT_DIR.to_string());
    let dir = Path::new(&out);
    if let Err(e) = std::fs::create_dir_all(dir) {
        return fail(EXIT_CONFIG, e);
    }
    let mut csv = Vec::new();
    traj.write_csv(&mut csv).expect("write to Vec");
    let stem = format!("{}-flow", problem_name);
    if let Err(e) = std::fs::write(dir.join(format!("{}.csv", stem)), csv) {
        return fail(EXIT_CONFIG, e);
    }
    let descent = if problem.has_hull() && !problem.is_composite() {
        Some(check_descent_identity(&traj))
    } else {
        None
    };
    let summary = serde_json::json!({
        "problem": problem_name,
        "status": traj.status,
        "nodes": traj.len(),
        "t_end": traj.terminal_time(),
        "terminal": traj.terminal().coords(),
        "f_end": traj.values.last(),
        "descent_identity_residual": descent.as_ref().map(|d| d.residual),
    });
    if let Err(e) = std::fs::write(
        dir.join(format!("{}.json", stem)),
        serde_json::to_string_pretty(&summary).expect("summary"),
    ) {
        return fail(EXIT_CONFIG, e);
    }
    println!(
        "flow {}: {} nodes, t_end = {}, terminal = {:?}, status = {:?}",
        problem_name,
        traj.len(),
        traj.terminal_time(),
        traj.terminal().coords(),
        traj.status
    );
    if let Some(d) = descent {
        println!(
            "descent identity: drop = {:.6e}, integral = {:.6e}, residual = {:.3e}",
            d.drop, d.integral, d.residual
        );
    }
    EXIT_OK
}

fn load_campaign(args: &VerifyArgs) -> Result<Campaign, String> {
    let path = match (&args.campaign, &args.config) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(cfg)) => {
            let file = load_file_config(Some(cfg))?;
            file.campaign.map(PathBuf::from)
        }
        (None, None) => None,
    };
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(&p).map_err(|e| format!("cannot read {}: {}", p.display(), e))?
        }
        None => DEFAULT_CAMPAIGN.to_string(),
    };
    toml::from_str(&text).map_err(|e| format!("campaign parse error: {}", e))
}

fn cmd_verify(args: VerifyArgs) -> u8 {
    let campaign = match load_campaign(&args) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let thresholds = match &args.thresholds {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(text) => match Thresholds::from_json(&text) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_CONFIG, e),
            },
            Err(e) => return fail(EXIT_CONFIG, format!("cannot read {}: {}", p.display(), e)),
        },
        None => Thresholds::from_json(FROZEN_THRESHOLDS).expect("shipped thresholds parse"),
    };
    let report = match run_campaign(&campaign, &thresholds, args.out.as_deref()) {
        Ok(r) => r,
        Err(e) => return fail(core_exit(&e), e),
    };
    print!("{}", report.render_table());
    if report.all_passed() {
        println!("all non-skipped checks passed");
        EXIT_OK
    } else {
        fail(EXIT_FAILED_VERDICT, "one or more verdicts failed")
    }
}

fn cmd_calibrate(args: CalibrateArgs) -> u8 {
    let text = match &args.campaign {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(EXIT_CONFIG, format!("cannot read {}: {}", p.display(), e)),
        },
        None => DEFAULT_CAMPAIGN.to_string(),
    };
    let campaign: Campaign = match toml::from_str(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, format!("campaign parse error: {}", e)),
    };
    let thresholds = match calibrate(&campaign) {
        Ok(t) => t,
        Err(e) => return fail(core_exit(&e), e),
    };
    if let Err(e) = std::fs::write(&args.out, thresholds.to_json()) {
        return fail(EXIT_CONFIG, e);
    }
    println!(
        "calibrated {} threshold entries -> {}",
        thresholds.entries.len(),
        args.out.display()
    );
    EXIT_OK
}
