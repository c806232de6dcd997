//! Closed-loop simulation: lift, control, step, unlift, log.
//!
//! A run never panics on an inadmissible or boundary-touching step; it
//! terminates early and embeds the failure in the record so Monte Carlo
//! batches can count failures instead of dying on the first one.

use crate::admissibility::step_report;
use crate::controller::{control, CommandSignal, GainSchedule, Rho2Policy};
use crate::csvio::{fmt_bool, fmt_f64};
use crate::error::{Error, Result};
use crate::lifted_dynamics::{f1_map, f2_map, required_chi2, LiftedSystem};
use crate::lifting::{SigmoidPair, StateBounds};
use crate::plant::{in_safe_set, step, PlantState, StrictFeedbackPlant};
use crate::rng::SplitMix64;

/// Everything a single closed-loop run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub plant: StrictFeedbackPlant,
    pub pair1: SigmoidPair,
    pub pair2: SigmoidPair,
    pub rho1: f64,
    pub rho2_policy: Rho2Policy,
    pub command: CommandSignal,
    pub initial_state: (f64, f64),
    pub horizon: usize,
    pub seed: u64,
    pub freeze_command: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        self.command.validate(self.plant.bounds().x1_bar())?;
        let s0 = PlantState::new(self.initial_state.0, self.initial_state.1);
        if !s0.x1.is_finite() || !s0.x2.is_finite() {
            return Err(Error::Config("initial state must be finite".into()));
        }
        if !in_safe_set(&self.plant, &s0) {
            return Err(Error::Config(format!(
                "initial state ({}, {}) is not strictly inside the safe set",
                s0.x1, s0.x2
            )));
        }
        GainSchedule::new(self.rho1, self.rho2_policy).map(|_| ())
    }

    fn lifted_system(&self) -> LiftedSystem {
        LiftedSystem::new(self.plant.clone(), self.pair1, self.pair2)
    }
}

/// One logged control step.
#[derive(Debug, Clone, Copy)]
pub struct StepRow {
    pub k: usize,
    pub x1: f64,
    pub x2: f64,
    pub u: f64,
    pub z1: f64,
    pub z2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub x1d: f64,
    pub e1: f64,
    pub e2: f64,
    pub rho2: f64,
    pub v1: f64,
    pub v2: f64,
    /// Composite one-step Lyapunov decrement the gains enforce:
    /// `(rho1^2 - 1) V1 + (rho2^2 - 1) V2`. Nonpositive, zero only at zero
    /// error.
    pub dv: f64,
    pub f1: f64,
    pub f2: f64,
    pub in_a1: bool,
    pub in_a2: bool,
    pub in_safe: bool,
    pub thm2_lhs: f64,
    pub deadbeat_ok: bool,
    pub ks_engaged: bool,
}

/// State-only bookkeeping for the state reached after the last control step.
#[derive(Debug, Clone, Copy)]
pub struct TerminalRow {
    pub k: usize,
    pub x1: f64,
    pub x2: f64,
    pub z1: f64,
    pub z2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub x1d: f64,
    pub e1: f64,
    pub e2: f64,
    pub v1: f64,
    pub v2: f64,
    pub f1: f64,
    pub in_a1: bool,
    pub in_safe: bool,
}

/// Why and where a run stopped early.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub step: usize,
    pub x1: f64,
    pub x2: f64,
    pub error: Error,
}

/// Complete log of one closed-loop run.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub steps: Vec<StepRow>,
    pub terminal: Option<TerminalRow>,
    pub failure: Option<RunFailure>,
    /// First step at which the gain policy committed to deadbeat.
    pub switch_step: Option<usize>,
    /// First post-switch step where the raw switching law disagreed with
    /// the committed zero gain, if any. Reported, never silently accepted.
    pub switching_violation: Option<usize>,
}

impl TrajectoryRecord {
    pub fn success(&self) -> bool {
        self.failure.is_none()
    }
}

/// Execute the closed loop for the configured horizon.
///
/// Step failures (inadmissible targets, lifting domain violations,
/// non-finite arithmetic) do not propagate as errors: the record is complete
/// up to the failure step and carries the failure. Only an invalid
/// configuration is rejected up front.
pub fn run(cfg: &RunConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let sys = cfg.lifted_system();
    let mut gains = GainSchedule::new(cfg.rho1, cfg.rho2_policy)?;
    let mut state = PlantState::new(cfg.initial_state.0, cfg.initial_state.1);
    let mut steps = Vec::with_capacity(cfg.horizon);
    let mut failure = None;

    for k in 0..cfg.horizon {
        match control_row(&sys, &state, cfg, &mut gains, k) {
            Err(error) => {
                failure = Some(RunFailure {
                    step: k,
                    x1: state.x1,
                    x2: state.x2,
                    error,
                });
                break;
            }
            Ok(row) => {
                let u = row.u;
                steps.push(row);
                match step(sys.plant(), &state, u) {
                    Err(error) => {
                        failure = Some(RunFailure {
                            step: k,
                            x1: state.x1,
                            x2: state.x2,
                            error,
                        });
                        break;
                    }
                    Ok(next) => state = next,
                }
            }
        }
    }

    let terminal = if failure.is_none() {
        match terminal_row(&sys, &state, cfg) {
            Ok(row) => Some(row),
            Err(error) => {
                failure = Some(RunFailure {
                    step: state.k,
                    x1: state.x1,
                    x2: state.x2,
                    error,
                });
                None
            }
        }
    } else {
        None
    };

    Ok(TrajectoryRecord {
        steps,
        terminal,
        failure,
        switch_step: gains.switch_step(),
        switching_violation: gains.violation_step(),
    })
}

fn control_row(
    sys: &LiftedSystem,
    state: &PlantState,
    cfg: &RunConfig,
    gains: &mut GainSchedule,
    k: usize,
) -> Result<StepRow> {
    let d = control(sys, state, &cfg.command, gains, cfg.freeze_command)?;
    let report = step_report(sys, state, &d, &cfg.command, k);
    let lp1 = sys.lift1(state.x1)?;
    let lp2 = sys.lift2(state.x2)?;
    let rho1 = gains.rho1();
    let v1 = 0.5 * d.e1 * d.e1;
    let v2 = 0.5 * d.e2 * d.e2;
    Ok(StepRow {
        k,
        x1: state.x1,
        x2: state.x2,
        u: d.u,
        z1: lp1.z,
        z2: lp2.z,
        zeta1: lp1.zeta,
        zeta2: lp2.zeta,
        x1d: cfg.command.eval(k),
        e1: d.e1,
        e2: d.e2,
        rho2: d.rho2_k,
        v1,
        v2,
        dv: (rho1 * rho1 - 1.0) * v1 + (d.rho2_k * d.rho2_k - 1.0) * v2,
        f1: d.predicted_f1,
        f2: f2_map(sys, lp1.z, lp2.z, d.u)?,
        in_a1: report.in_a1,
        in_a2: report.in_a2,
        in_safe: report.in_safe,
        thm2_lhs: report.thm2_lhs,
        deadbeat_ok: report.deadbeat_ok,
        ks_engaged: gains.switch_step().is_some(),
    })
}

fn terminal_row(sys: &LiftedSystem, state: &PlantState, cfg: &RunConfig) -> Result<TerminalRow> {
    let k = state.k;
    let lp1 = sys.lift1(state.x1)?;
    let lp2 = sys.lift2(state.x2)?;
    let x1d = cfg.command.eval(k);
    let x1d_next = if cfg.freeze_command {
        x1d
    } else {
        cfg.command.eval(k + 1)
    };
    let chi1 = sys.pair1().psi(lp1.zeta);
    let chi1d = sys.pair1().psi(sys.lift1(x1d)?.zeta);
    let chi1d_next = sys.pair1().psi(sys.lift1(x1d_next)?.zeta);
    let e1 = chi1 - chi1d;
    let t0 = required_chi2(
        sys,
        sys.bounds().x1_bar() * chi1,
        cfg.rho1 * e1 + chi1d_next,
    )?;
    let e2 = sys.pair2().psi(lp2.zeta) - t0;
    let f1 = f1_map(sys, lp1.z, lp2.z)?;
    Ok(TerminalRow {
        k,
        x1: state.x1,
        x2: state.x2,
        z1: lp1.z,
        z2: lp2.z,
        zeta1: lp1.zeta,
        zeta2: lp2.zeta,
        x1d,
        e1,
        e2,
        v1: 0.5 * e1 * e1,
        v2: 0.5 * e2 * e2,
        f1,
        in_a1: f1.abs() < 1.0,
        in_safe: in_safe_set(sys.plant(), state),
    })
}

/// CSV header of the trajectory format.
pub const TRAJECTORY_CSV_HEADER: &str =
    "k,x1,x2,u,z1,z2,x1d,e1,e2,rho2,V1,V2,dV,F1,F2,in_A1,in_A2,in_safe,thm2_lhs,deadbeat_ok";

/// Serialize a record to the trajectory CSV format. The terminal row leaves
/// the control-dependent columns empty.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for r in &record.steps {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            fmt_f64(r.x1),
            fmt_f64(r.x2),
            fmt_f64(r.u),
            fmt_f64(r.z1),
            fmt_f64(r.z2),
            fmt_f64(r.x1d),
            fmt_f64(r.e1),
            fmt_f64(r.e2),
            fmt_f64(r.rho2),
            fmt_f64(r.v1),
            fmt_f64(r.v2),
            fmt_f64(r.dv),
            fmt_f64(r.f1),
            fmt_f64(r.f2),
            fmt_bool(r.in_a1),
            fmt_bool(r.in_a2),
            fmt_bool(r.in_safe),
            fmt_f64(r.thm2_lhs),
            fmt_bool(r.deadbeat_ok),
        ));
    }
    if let Some(t) = &record.terminal {
        out.push_str(&format!(
            "{},{},{},,{},{},{},{},{},,{},{},,{},,{},,{},,\n",
            t.k,
            fmt_f64(t.x1),
            fmt_f64(t.x2),
            fmt_f64(t.z1),
            fmt_f64(t.z2),
            fmt_f64(t.x1d),
            fmt_f64(t.e1),
            fmt_f64(t.e2),
            fmt_f64(t.v1),
            fmt_f64(t.v2),
            fmt_f64(t.f1),
            fmt_bool(t.in_a1),
            fmt_bool(t.in_safe),
        ));
    }
    out
}

/// Which feasibility constraints initial-condition sampling enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcFilter {
    /// Inside the safe box, `|x1 + x2| < x1_bar` and
    /// `|x1 + x2 - x1d(0)| < x2_bar`: the one-step feasibility constraints
    /// of the double integrator. Runs started here stay in deadbeat mode.
    Admissible,
    /// Inside the safe box and `|x1 + x2| < x1_bar` only. Large initial
    /// offsets are possible and exercise the switching-gain transient.
    A1Only,
}

const SAMPLE_REJECTION_LIMIT: u64 = 1_000_000;

/// Rejection-sample initial conditions uniform over the safe box, keeping
/// those that satisfy the chosen feasibility filter. Deterministic given the
/// seed.
pub fn sample_initial_conditions_with(
    bounds: StateBounds,
    cmd: &CommandSignal,
    n: usize,
    seed: u64,
    filter: IcFilter,
) -> Result<Vec<(f64, f64)>> {
    if n < 1 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(n);
    let mut rejections: u64 = 0;
    while out.len() < n {
        let x1 = rng.next_range(-bounds.x1_bar(), bounds.x1_bar());
        let x2 = rng.next_range(-bounds.x2_bar(), bounds.x2_bar());
        if ic_accepted(bounds, cmd, x1, x2, filter) {
            out.push((x1, x2));
        } else {
            rejections += 1;
            if rejections >= SAMPLE_REJECTION_LIMIT {
                return Err(Error::Exhausted {
                    attempts: rejections,
                });
            }
        }
    }
    Ok(out)
}

/// Sampling with both feasibility constraints (see [`IcFilter::Admissible`]).
pub fn sample_initial_conditions(
    bounds: StateBounds,
    cmd: &CommandSignal,
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    sample_initial_conditions_with(bounds, cmd, n, seed, IcFilter::Admissible)
}

fn ic_accepted(
    bounds: StateBounds,
    cmd: &CommandSignal,
    x1: f64,
    x2: f64,
    filter: IcFilter,
) -> bool {
    let sum = x1 + x2;
    if sum.abs() >= bounds.x1_bar() {
        return false;
    }
    match filter {
        IcFilter::A1Only => true,
        IcFilter::Admissible => (sum - cmd.eval(0)).abs() < bounds.x2_bar(),
    }
}

/// Aggregates of one Monte Carlo trial.
#[derive(Debug, Clone, Copy)]
pub struct TrialResult {
    pub trial: usize,
    pub success: bool,
    pub failure_step: Option<usize>,
    pub max_abs_f1: f64,
    pub max_abs_f2: f64,
    pub max_x1_ratio: f64,
    pub max_x2_ratio: f64,
    pub steps_to_ks: Option<usize>,
    pub terminal_abs_e1: Option<f64>,
}

/// Per-trial results of a Monte Carlo batch, ordered by trial index.
#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub trials: Vec<TrialResult>,
}

impl MonteCarloSummary {
    pub fn successes(&self) -> usize {
        self.trials.iter().filter(|t| t.success).count()
    }

    pub fn fraction_deadbeat_from_start(&self) -> f64 {
        let n = self
            .trials
            .iter()
            .filter(|t| t.steps_to_ks == Some(0))
            .count();
        n as f64 / self.trials.len() as f64
    }
}

/// CSV header of the Monte Carlo summary format.
pub const MONTE_CARLO_CSV_HEADER: &str =
    "trial,success,failure_step,max_F1,max_F2,max_x1_ratio,max_x2_ratio,steps_to_ks,terminal_e1";

pub fn monte_carlo_csv(summary: &MonteCarloSummary) -> String {
    let mut out = String::new();
    out.push_str(MONTE_CARLO_CSV_HEADER);
    out.push('\n');
    for t in &summary.trials {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            t.trial,
            fmt_bool(t.success),
            t.failure_step.map(|s| s.to_string()).unwrap_or_default(),
            fmt_f64(t.max_abs_f1),
            fmt_f64(t.max_abs_f2),
            fmt_f64(t.max_x1_ratio),
            fmt_f64(t.max_x2_ratio),
            t.steps_to_ks.map(|s| s.to_string()).unwrap_or_default(),
            t.terminal_abs_e1.map(fmt_f64).unwrap_or_default(),
        ));
    }
    out
}

/// Run `trials` independent closed loops from sampled initial conditions.
/// Trial `i` draws from the stream seeded with `seed + i`, so the batch is
/// deterministic and individual trials can be reproduced in isolation.
pub fn monte_carlo(
    template: &RunConfig,
    trials: usize,
    seed: u64,
    filter: IcFilter,
) -> Result<MonteCarloSummary> {
    if trials < 1 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let bounds = template.plant.bounds();
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let trial_seed = seed.wrapping_add(trial as u64);
        let ic =
            sample_initial_conditions_with(bounds, &template.command, 1, trial_seed, filter)?[0];
        let cfg = RunConfig {
            initial_state: ic,
            seed: trial_seed,
            ..template.clone()
        };
        let record = run(&cfg)?;
        results.push(summarize_trial(trial, &cfg, &record));
    }
    Ok(MonteCarloSummary { trials: results })
}

fn summarize_trial(trial: usize, cfg: &RunConfig, record: &TrajectoryRecord) -> TrialResult {
    let bounds = cfg.plant.bounds();
    let mut max_abs_f1: f64 = 0.0;
    let mut max_abs_f2: f64 = 0.0;
    let mut max_x1_ratio: f64 = 0.0;
    let mut max_x2_ratio: f64 = 0.0;
    for r in &record.steps {
        max_abs_f1 = max_abs_f1.max(r.f1.abs());
        max_abs_f2 = max_abs_f2.max(r.f2.abs());
        max_x1_ratio = max_x1_ratio.max(r.x1.abs() / bounds.x1_bar());
        max_x2_ratio = max_x2_ratio.max(r.x2.abs() / bounds.x2_bar());
    }
    if let Some(t) = &record.terminal {
        max_abs_f1 = max_abs_f1.max(t.f1.abs());
        max_x1_ratio = max_x1_ratio.max(t.x1.abs() / bounds.x1_bar());
        max_x2_ratio = max_x2_ratio.max(t.x2.abs() / bounds.x2_bar());
    }
    if let Some(f) = &record.failure {
        max_x1_ratio = max_x1_ratio.max(f.x1.abs() / bounds.x1_bar());
        max_x2_ratio = max_x2_ratio.max(f.x2.abs() / bounds.x2_bar());
    }
    TrialResult {
        trial,
        success: record.success(),
        failure_step: record.failure.as_ref().map(|f| f.step),
        max_abs_f1,
        max_abs_f2,
        max_x1_ratio,
        max_x2_ratio,
        steps_to_ks: record.switch_step,
        terminal_abs_e1: record.terminal.as_ref().map(|t| t.e1.abs()),
    }
}
