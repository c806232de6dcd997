//! Command-line front end: single runs, Monte Carlo batches, admissible
//! region sampling and the verification suite, all emitting CSV for
//! external plotting.

mod config;

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use liftctl_core::admissibility::sample_regions;
use liftctl_core::controller::{CommandSignal, Rho2Policy};
use liftctl_core::csvio::{fmt_bool, fmt_f64};
use liftctl_core::lifted_dynamics::LiftedSystem;
use liftctl_core::lifting::{by_name as pair_by_name, SigmoidPair};
use liftctl_core::plant::by_name as plant_by_name;
use liftctl_core::sim::{
    monte_carlo, monte_carlo_csv, run, sample_initial_conditions, trajectory_csv, IcFilter,
    RunConfig,
};
use liftctl_core::verify::builtin::run_suites;

#[derive(Parser)]
#[command(
    name = "liftctl",
    version,
    about = "Constraint-lifting backstepping control: simulate, sample, verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write the trajectory CSV.
    Run(RunArgs),
    /// Run a batch of seeded trials and write the per-trial summary CSV.
    Montecarlo(MonteCarloArgs),
    /// Sample admissible-set membership over a state grid and write it as CSV.
    Regions(RegionArgs),
    /// Run the built-in verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Clone, Default)]
struct SharedArgs {
    /// Config file with key = value lines mirroring the flag names;
    /// explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Plant name [default: double-integrator]
    #[arg(long)]
    plant: Option<String>,
    /// Position bound x1_bar [default: 2]
    #[arg(long)]
    x1bar: Option<f64>,
    /// Velocity bound x2_bar [default: 1]
    #[arg(long)]
    x2bar: Option<f64>,
    /// Lifting pair for both channels: tan, atanh, rational, algebraic,
    /// erf, gudermannian [default: atanh]
    #[arg(long)]
    sigmoid: Option<String>,
    /// Override the lifting pair for the x1 channel only
    #[arg(long)]
    sigmoid1: Option<String>,
    /// Override the lifting pair for the x2 channel only
    #[arg(long)]
    sigmoid2: Option<String>,
    /// Guard band for the lifting maps [default: 1e-9]
    #[arg(long)]
    guard_band: Option<f64>,
    /// First-step gain, |rho1| < 1; nonzero values need
    /// --allow-unproven-rho1 [default: 0]
    #[arg(long)]
    rho1: Option<f64>,
    /// Second-step gain policy: switching, deadbeat or fixed:<v>
    /// [default: switching]
    #[arg(long)]
    rho2: Option<String>,
    /// Command signal: const:<v> or sin:A=<a>,omega=<w> [default: const:0.1]
    #[arg(long)]
    command: Option<String>,
    /// Evaluate command lookahead frozen at the current step
    #[arg(long)]
    freeze_command: bool,
    /// Permit nonzero rho1 (invariance is monitored, not proven)
    #[arg(long)]
    allow_unproven_rho1: bool,
    /// Seed for sampling; falls back to LIFTCTL_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Initial position; sampled from the seed when omitted
    #[arg(long)]
    x10: Option<f64>,
    /// Initial velocity; sampled from the seed when omitted
    #[arg(long)]
    x20: Option<f64>,
    /// Number of control steps [default: 50]
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Number of control steps per trial [default: 200]
    #[arg(long)]
    steps: Option<usize>,
    /// Number of trials [default: 100]
    #[arg(long)]
    trials: Option<usize>,
    /// Initial-condition filter: admissible (one-step feasible) or a1-only
    /// [default: admissible]
    #[arg(long)]
    ic_filter: Option<String>,
}

#[derive(Args)]
struct RegionArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Grid resolution per axis [default: 101]
    #[arg(long)]
    res: Option<usize>,
    /// Frozen rho2 used for the input at every grid point [default: 0]
    #[arg(long)]
    rho2_value: Option<f64>,
    /// Step index at which the command is evaluated [default: 0]
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Suite to run: all, roundtrip, proposition, contraction, invariance,
    /// deadbeat, geometry, sinusoid, determinism [default: all]
    #[arg(long)]
    suite: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Regions(args) => cmd_regions(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Settings shared by every subcommand, resolved from flags, config file,
/// environment and built-in defaults.
struct Resolved {
    run_template: RunConfig,
    seed: u64,
    out: Option<PathBuf>,
}

fn load_file(shared: &SharedArgs) -> Result<HashMap<String, String>, String> {
    match &shared.config {
        Some(path) => config::load(path),
        None => Ok(HashMap::new()),
    }
}

fn resolve_shared(
    shared: &SharedArgs,
    file: &HashMap<String, String>,
    explicit_ic: Option<(f64, f64)>,
    steps: usize,
) -> Result<Resolved, String> {
    let plant_name = config::setting(
        &shared.plant,
        file,
        "plant",
        "double-integrator".to_string(),
    )?;
    let x1bar = config::setting(&shared.x1bar, file, "x1bar", 2.0)?;
    let x2bar = config::setting(&shared.x2bar, file, "x2bar", 1.0)?;
    let plant = plant_by_name(&plant_name, x1bar, x2bar).map_err(|e| e.to_string())?;

    let sigmoid = config::setting(&shared.sigmoid, file, "sigmoid", "atanh".to_string())?;
    let sigmoid1 =
        config::optional(&shared.sigmoid1, file, "sigmoid1")?.unwrap_or_else(|| sigmoid.clone());
    let sigmoid2 = config::optional(&shared.sigmoid2, file, "sigmoid2")?.unwrap_or(sigmoid);
    let guard_band = config::optional(&shared.guard_band, file, "guard-band")?;
    let lookup = |name: &str| -> Result<SigmoidPair, String> {
        let pair = pair_by_name(name).ok_or_else(|| format!("unknown sigmoid pair '{name}'"))?;
        match guard_band {
            Some(gb) => pair.with_guard_band(gb).map_err(|e| e.to_string()),
            None => Ok(pair),
        }
    };
    let pair1 = lookup(&sigmoid1)?;
    let pair2 = lookup(&sigmoid2)?;

    let rho1 = config::setting(&shared.rho1, file, "rho1", 0.0)?;
    let allow_rho1 = config::switch(shared.allow_unproven_rho1, file, "allow-unproven-rho1")?;
    if rho1 != 0.0 && !allow_rho1 {
        return Err(format!(
            "rho1 = {rho1}: forward invariance is only guaranteed for rho1 = 0; \
             pass --allow-unproven-rho1 to proceed with runtime monitoring"
        ));
    }
    let rho2_spec = config::setting(&shared.rho2, file, "rho2", "switching".to_string())?;
    let rho2_policy = Rho2Policy::parse(&rho2_spec).map_err(|e| e.to_string())?;

    let command_spec = config::setting(&shared.command, file, "command", "const:0.1".to_string())?;
    let command = CommandSignal::parse(&command_spec).map_err(|e| e.to_string())?;

    let env_seed = std::env::var("LIFTCTL_SEED")
        .ok()
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| format!("LIFTCTL_SEED: cannot parse '{s}'"))
        })
        .transpose()?;
    let seed = config::optional(&shared.seed, file, "seed")?
        .or(env_seed)
        .unwrap_or(0);

    let freeze_command = config::switch(shared.freeze_command, file, "freeze-command")?;

    let initial_state = match explicit_ic {
        Some(ic) => ic,
        None => sample_initial_conditions(plant.bounds(), &command, 1, seed)
            .map_err(|e| e.to_string())?[0],
    };

    let out = match &shared.out {
        Some(p) => Some(p.clone()),
        None => config::optional::<String>(&None, file, "out")?.map(PathBuf::from),
    };

    Ok(Resolved {
        run_template: RunConfig {
            plant,
            pair1,
            pair2,
            rho1,
            rho2_policy,
            command,
            initial_state,
            horizon: steps,
            seed,
            freeze_command,
        },
        seed,
        out,
    })
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, String> {
    let file = load_file(&args.shared)?;
    let steps = config::setting(&args.steps, &file, "steps", 50usize)?;
    let x10 = config::optional(&args.x10, &file, "x10")?;
    let x20 = config::optional(&args.x20, &file, "x20")?;
    let explicit_ic = match (x10, x20) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err("provide both --x10 and --x20, or neither".into()),
    };
    let resolved = resolve_shared(&args.shared, &file, explicit_ic, steps)?;
    let record = run(&resolved.run_template).map_err(|e| e.to_string())?;
    if let Some(failure) = &record.failure {
        eprintln!(
            "warning: run stopped at step {} ({}); record truncated there",
            failure.step, failure.error
        );
    }
    emit(&resolved.out, &trajectory_csv(&record))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_montecarlo(args: MonteCarloArgs) -> Result<ExitCode, String> {
    let file = load_file(&args.shared)?;
    let steps = config::setting(&args.steps, &file, "steps", 200usize)?;
    let trials = config::setting(&args.trials, &file, "trials", 100usize)?;
    let filter_name = config::setting(
        &args.ic_filter,
        &file,
        "ic-filter",
        "admissible".to_string(),
    )?;
    let filter = match filter_name.as_str() {
        "admissible" => IcFilter::Admissible,
        "a1-only" => IcFilter::A1Only,
        other => {
            return Err(format!(
                "ic-filter '{other}' is neither admissible nor a1-only"
            ))
        }
    };
    let resolved = resolve_shared(&args.shared, &file, Some((0.0, 0.0)), steps)?;
    let summary = monte_carlo(&resolved.run_template, trials, resolved.seed, filter)
        .map_err(|e| e.to_string())?;
    emit(&resolved.out, &monte_carlo_csv(&summary))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_regions(args: RegionArgs) -> Result<ExitCode, String> {
    let file = load_file(&args.shared)?;
    let res = config::setting(&args.res, &file, "res", 101usize)?;
    let rho2_value = config::setting(&args.rho2_value, &file, "rho2-value", 0.0)?;
    let k = config::setting(&args.k, &file, "k", 0usize)?;
    let resolved = resolve_shared(&args.shared, &file, Some((0.0, 0.0)), 1)?;
    let sys = LiftedSystem::new(
        resolved.run_template.plant.clone(),
        resolved.run_template.pair1,
        resolved.run_template.pair2,
    );
    let grid = sample_regions(&sys, rho2_value, &resolved.run_template.command, k, res)
        .map_err(|e| e.to_string())?;
    let mut csv = String::from("x1,x2,in_A1,in_A2\n");
    for p in grid {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(p.x1),
            fmt_f64(p.x2),
            fmt_bool(p.in_a1),
            fmt_bool(p.in_a2),
        ));
    }
    emit(&resolved.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, String> {
    let file = load_file(&args.shared)?;
    let suite = config::setting(&args.suite, &file, "suite", "all".to_string())?;
    let outcomes = run_suites(&suite).map_err(|e| e.to_string())?;
    let mut all_pass = true;
    let mut csv = String::from("check,step,expected,actual,tol,pass\n");
    for outcome in &outcomes {
        let pass = outcome.pass();
        all_pass &= pass;
        println!(
            "suite {}: {}",
            outcome.name,
            if pass { "pass" } else { "FAIL" }
        );
        print!("{}", outcome.report.to_text());
        for line in outcome.report.to_csv().lines().skip(1) {
            csv.push_str(line);
            csv.push('\n');
        }
    }
    if let Some(out) = &args.shared.out {
        std::fs::write(out, &csv).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
