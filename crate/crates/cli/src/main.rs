//! Batch command-line surface: launch optimization campaigns, evaluate
//! plans, compare baselines and run the analytic cross-checks, all from
//! JSON configs. Machine-readable one-line JSON goes to stdout; human
//! detail goes to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use epiopt::campaign::{self, CampaignConfig};
use epiopt::codec;
use epiopt::cost::Mode;
use epiopt::dspsa::{tune_gain_for_schedule, GainSchedule, RunConfig};
use epiopt::scenario::Scenario;

mod config;
use config::{ExitKind, FileConfig, ToolError};

#[derive(Parser)]
#[command(name = "epiopt", version, about = "Simulation-based discrete intervention optimization")]
struct Cli {
    /// Cap worker parallelism (also honored via DSPSA_EPI_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CampaignArgs {
    /// Path to a JSON config (see configs/ for the schema by example).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; all files are written beneath it.
    #[arg(long)]
    out: PathBuf,
    /// Master seed override; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario mode; must agree with the config when both are given.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<String>,
    /// Plan to evaluate, comma-separated integers (defaults to the
    /// config's starting point).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    plan: Option<Vec<i64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full optimization campaign and write traces + summary.
    Optimize(CampaignArgs),
    /// Replicated evaluation of one plan (mean, CI, outcome sketch).
    Evaluate(EvalArgs),
    /// Evaluate the scenario's reference baseline plans.
    Baselines(EvalArgs),
    /// Probe whether common random numbers help for this oracle.
    CrnProbe(EvalArgs),
    /// Tune the gain coefficient for the configured schedule.
    TuneGain(EvalArgs),
    /// Print the herd-immunity threshold 1 - 1/R0.
    HerdCheck {
        #[arg(long)]
        r0: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Optimize(args) => cmd_optimize(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Baselines(args) => cmd_baselines(args),
        Command::CrnProbe(args) => cmd_crn_probe(args),
        Command::TuneGain(args) => cmd_tune_gain(args),
        Command::HerdCheck { r0 } => cmd_herd_check(r0),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind {
                ExitKind::Config => 1,
                ExitKind::Runtime => 2,
            })
        }
    }
}

fn init_threads(flag: Option<usize>) -> Result<(), String> {
    let from_env = std::env::var("DSPSA_EPI_THREADS")
        .ok()
        .map(|v| v.parse::<usize>().map_err(|_| format!("DSPSA_EPI_THREADS must be an integer, got {v:?}")))
        .transpose()?;
    if let Some(n) = flag.or(from_env) {
        if n == 0 {
            return Err("thread count must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Shared front half of every config-driven subcommand.
struct Session {
    config: FileConfig,
    scenario: Scenario,
    seed: u64,
}

fn load_session(path: &PathBuf, seed_override: Option<u64>, mode_flag: Option<&str>) -> Result<Session, ToolError> {
    let config = FileConfig::load(path)?;
    if let Some(flag) = mode_flag {
        let flag_mode = match flag {
            "h1n1" => Mode::H1n1,
            "covid" => Mode::Covid,
            other => return Err(ToolError::config(format!("unknown mode {other:?} (expected h1n1 or covid)"))),
        };
        if flag_mode != config.mode {
            return Err(ToolError::config(format!(
                "--mode {flag} disagrees with the config's mode {:?}",
                config.mode
            )));
        }
    }
    let scenario = config.build_scenario()?;
    let seed = seed_override.unwrap_or(config.seed);
    Ok(Session { config, scenario, seed })
}

fn resolve_gain(session: &Session) -> Result<GainSchedule, ToolError> {
    let g = &session.config.gain;
    let a = match g.a {
        Some(a) => a,
        None => tune_gain_for_schedule(
            &session.scenario.oracle,
            &session.scenario.theta0,
            session.scenario.bounds.projection(),
            g.first_step,
            g.stability,
            g.alpha,
            g.tune_samples,
            session.seed,
        )
        .map_err(ToolError::runtime)?,
    };
    GainSchedule::new(a, g.stability, g.alpha).map_err(ToolError::config_from)
}

#[derive(Serialize)]
struct OptimizeSummary {
    schema_version: u32,
    mode: Mode,
    seed: u64,
    iterations: usize,
    runs: usize,
    gains: GainSchedule,
    solutions: Vec<Vec<i64>>,
    best_solution: Vec<i64>,
    best_ci: campaign::ConfidenceInterval,
    baselines: Vec<campaign::BaselineResult>,
    crn_probe: campaign::CrnProbe,
    trial_failures: Vec<(usize, String)>,
}

fn cmd_optimize(args: CampaignArgs) -> Result<String, ToolError> {
    let session = load_session(&args.config, args.seed, args.mode.as_deref())?;
    let gains = resolve_gain(&session)?;
    eprintln!(
        "optimizing {:?}: {} trials x {} iterations, gains a={:.4} A={} alpha={}, seed {}",
        session.config.mode, session.config.runs, session.config.iterations, gains.a, gains.stability, gains.alpha, session.seed
    );
    let campaign_config = CampaignConfig {
        runs: session.config.runs,
        run_config: RunConfig {
            iterations: session.config.iterations,
            theta0: session.scenario.theta0.clone(),
            gains: gains.clone(),
            crn: session.config.crn,
            base_seed: session.seed,
        },
        ci_replicates: session.config.ci_replicates,
        ci_level: session.config.ci_level,
    };
    let repair: Option<&(dyn Fn(&mut [f64]) + Sync)> = match session.config.mode {
        Mode::Covid => Some(&codec::repair_windows),
        Mode::H1n1 => None,
    };
    let oracle = &session.scenario.oracle;
    let project = session.scenario.bounds.projection();
    let probe = campaign::crn_probe(
        oracle,
        &session.scenario.theta0.values().iter().map(|v| *v as i64).collect::<Vec<_>>(),
        session.config.crn_probe_pairs,
        session.seed ^ 0x43524E,
    )
    .map_err(ToolError::runtime)?;
    let result = campaign::run_campaign(&campaign_config, oracle, &project, repair)
        .map_err(ToolError::runtime)?;
    for (t, msg) in &result.failures {
        eprintln!("trial {t} failed: {msg}");
    }

    // replicate every distinct terminal solution and keep the best
    let mut best: Option<(Vec<i64>, campaign::ConfidenceInterval)> = None;
    for sol in &result.solutions {
        let ci = campaign::terminal_ci(sol, oracle, session.config.ci_replicates, session.config.ci_level, session.seed ^ 0x7E57)
            .map_err(ToolError::runtime)?;
        if best.as_ref().map_or(true, |(_, b)| ci.mean < b.mean) {
            best = Some((sol.clone(), ci));
        }
    }
    let (best_solution, best_ci) = best.expect("at least one trial succeeded");
    let baselines = campaign::evaluate_baselines(
        &session.scenario.baselines,
        oracle,
        session.config.ci_replicates,
        session.seed ^ 0x7E57,
    );

    std::fs::create_dir_all(&args.out).map_err(|e| ToolError::runtime_msg(format!("creating {}: {e}", args.out.display())))?;
    campaign::write_campaign_dir(&args.out, &result).map_err(ToolError::runtime)?;
    let summary = OptimizeSummary {
        schema_version: config::SCHEMA_VERSION,
        mode: session.config.mode,
        seed: session.seed,
        iterations: session.config.iterations,
        runs: session.config.runs,
        gains,
        solutions: result.solutions.clone(),
        best_solution,
        best_ci,
        baselines,
        crn_probe: probe,
        trial_failures: result.failures.clone(),
    };
    let pretty = serde_json::to_vec_pretty(&summary).expect("serializable summary");
    std::fs::write(args.out.join("summary.json"), pretty)
        .map_err(|e| ToolError::runtime_msg(format!("writing summary.json: {e}")))?;
    eprintln!(
        "best solution {:?} with mean loss {:.3} (95% CI half-width {:.3}); wrote {}",
        summary.best_solution, summary.best_ci.mean, summary.best_ci.half_width, args.out.display()
    );
    Ok(json!({
        "status": "ok",
        "out": args.out,
        "best_solution": summary.best_solution,
        "best_mean": summary.best_ci.mean,
        "ci": [summary.best_ci.lo, summary.best_ci.hi],
        "crn_recommended": summary.crn_probe.recommend_crn,
    })
    .to_string())
}

fn plan_or_theta0(session: &Session, plan: Option<Vec<i64>>) -> Result<Vec<i64>, ToolError> {
    let plan = plan.unwrap_or_else(|| {
        session.scenario.theta0.values().iter().map(|v| *v as i64).collect()
    });
    let expected = session.scenario.bounds.dim();
    if plan.len() != expected {
        return Err(ToolError::config(format!(
            "plan has {} slots but this mode needs {expected}",
            plan.len()
        )));
    }
    Ok(plan)
}

fn cmd_evaluate(args: EvalArgs) -> Result<String, ToolError> {
    let session = load_session(&args.config, args.seed, args.mode.as_deref())?;
    let plan = plan_or_theta0(&session, args.plan)?;
    let ci = campaign::terminal_ci(
        &plan,
        &session.scenario.oracle,
        session.config.ci_replicates,
        session.config.ci_level,
        session.seed,
    )
    .map_err(ToolError::runtime)?;
    eprintln!(
        "plan {plan:?}: mean loss {:.4} over {} replicates, {}% CI [{:.4}, {:.4}]",
        ci.mean,
        ci.n,
        session.config.ci_level * 100.0,
        ci.lo,
        ci.hi
    );
    Ok(json!({"status": "ok", "plan": plan, "ci": ci}).to_string())
}

fn cmd_baselines(args: EvalArgs) -> Result<String, ToolError> {
    let session = load_session(&args.config, args.seed, args.mode.as_deref())?;
    let results = campaign::evaluate_baselines(
        &session.scenario.baselines,
        &session.scenario.oracle,
        session.config.ci_replicates,
        session.seed,
    );
    for b in campaign::rank_baselines(&results) {
        match &b.error {
            None => eprintln!("{:<28} {:10.4} (se {:.4})  {:?}", b.name, b.mean, b.std_error, b.theta),
            Some(e) => eprintln!("{:<28} failed: {e}", b.name),
        }
    }
    Ok(json!({"status": "ok", "baselines": results}).to_string())
}

fn cmd_crn_probe(args: EvalArgs) -> Result<String, ToolError> {
    let session = load_session(&args.config, args.seed, args.mode.as_deref())?;
    let plan = plan_or_theta0(&session, args.plan)?;
    let probe = campaign::crn_probe(
        &session.scenario.oracle,
        &plan,
        session.config.crn_probe_pairs,
        session.seed,
    )
    .map_err(ToolError::runtime)?;
    eprintln!(
        "paired correlation {:.4} over {} pairs; recommend common random numbers: {}",
        probe.correlation,
        probe.n_pairs,
        match probe.recommend_crn {
            Some(true) => "yes",
            Some(false) => "no",
            None => "inconclusive",
        }
    );
    Ok(json!({"status": "ok", "probe": probe}).to_string())
}

fn cmd_tune_gain(args: EvalArgs) -> Result<String, ToolError> {
    let session = load_session(&args.config, args.seed, args.mode.as_deref())?;
    let g = &session.config.gain;
    let a = tune_gain_for_schedule(
        &session.scenario.oracle,
        &session.scenario.theta0,
        session.scenario.bounds.projection(),
        g.first_step,
        g.stability,
        g.alpha,
        g.tune_samples,
        session.seed,
    )
    .map_err(ToolError::runtime)?;
    eprintln!(
        "tuned a = {a:.5} for first step {} with A = {}, alpha = {}",
        g.first_step, g.stability, g.alpha
    );
    Ok(json!({"status": "ok", "a": a, "A": g.stability, "alpha": g.alpha}).to_string())
}

fn cmd_herd_check(r0: f64) -> Result<String, ToolError> {
    if !(r0 > 0.0) {
        return Err(ToolError::config(format!("--r0 must be positive, got {r0}")));
    }
    let threshold = campaign::herd_threshold(r0);
    eprintln!("herd immunity threshold at R0 = {r0}: {:.1}%", threshold * 100.0);
    Ok(json!({
        "status": "ok",
        "r0": r0,
        "herd_threshold": threshold,
        "percent": format!("{:.1}%", threshold * 100.0),
    })
    .to_string())
}
