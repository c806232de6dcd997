//! Executable oracles for the closed-loop guarantees.
//!
//! Every check re-derives its quantities from the raw state and input
//! columns of a trajectory plus the run configuration; logged error and
//! Lyapunov columns are never trusted. Reports are line oriented and can be
//! serialized as `check,step,expected,actual,tol,pass` CSV.

pub mod builtin;

use crate::controller::{rho2_switching, CommandSignal, Rho2Policy};
use crate::csvio::{fmt_bool, fmt_f64};
use crate::error::{Error, Result};
use crate::lifted_dynamics::LiftedSystem;
use crate::sim::{RunConfig, TrajectoryRecord};

/// Relative tolerance for identities that pass through catalogued
/// transcendentals (one sigmoid round trip costs a few ulps).
pub const IDENTITY_REL_TOL: f64 = 1e-9;
/// Absolute floor for the same identities near zero.
pub const IDENTITY_ABS_TOL: f64 = 1e-12;
/// Tolerance for the error recursions, which are pure arithmetic on top of
/// the lifted values.
pub const RECURSION_TOL: f64 = 1e-10;
/// Relative agreement demanded between the iterated and closed-form
/// contraction products.
pub const PRODUCT_REL_TOL: f64 = 1e-12;

/// One comparison performed by a check.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub check: String,
    pub step: Option<usize>,
    pub expected: f64,
    pub actual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Outcome of one check: its comparison lines, worst case first violation.
#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn first_failure(&self) -> Option<&CheckLine> {
        self.lines.iter().find(|l| !l.pass)
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.lines.extend(other.lines);
    }

    pub const CSV_HEADER: &'static str = "check,step,expected,actual,tol,pass";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for l in &self.lines {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                l.check,
                l.step.map(|s| s.to_string()).unwrap_or_default(),
                fmt_f64(l.expected),
                fmt_f64(l.actual),
                fmt_f64(l.tol),
                fmt_bool(l.pass),
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(&format!(
                "{} {}: expected {:.6e} actual {:.6e} (tol {:.1e}) at step {}\n",
                if l.pass { "pass" } else { "FAIL" },
                l.check,
                l.expected,
                l.actual,
                l.tol,
                l.step.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
            ));
        }
        out
    }
}

fn within(expected: f64, actual: f64, rel: f64, abs: f64) -> bool {
    let scale = expected.abs().max(actual.abs());
    (expected - actual).abs() <= abs.max(rel * scale)
}

/// Track the worst deviation of a per-step identity and fold it into a
/// single report line (plus one line per outright violation).
struct IdentityTracker {
    check: &'static str,
    rel: f64,
    abs: f64,
    worst: Option<CheckLine>,
    failures: Vec<CheckLine>,
}

impl IdentityTracker {
    fn new(check: &'static str, rel: f64, abs: f64) -> Self {
        Self {
            check,
            rel,
            abs,
            worst: None,
            failures: Vec::new(),
        }
    }

    fn observe(&mut self, step: usize, expected: f64, actual: f64) {
        let pass = within(expected, actual, self.rel, self.abs);
        let line = CheckLine {
            check: self.check.to_string(),
            step: Some(step),
            expected,
            actual,
            tol: self.rel.max(self.abs),
            pass,
        };
        if !pass {
            self.failures.push(line.clone());
        }
        // rank by fraction of the allowed tolerance consumed
        let margin = |l: &CheckLine| {
            let scale = l.expected.abs().max(l.actual.abs());
            (l.expected - l.actual).abs() / self.abs.max(self.rel * scale)
        };
        if self
            .worst
            .as_ref()
            .is_none_or(|w| margin(&line) > margin(w))
        {
            self.worst = Some(line);
        }
    }

    fn into_lines(self) -> Vec<CheckLine> {
        if self.failures.is_empty() {
            self.worst.into_iter().collect()
        } else {
            self.failures
        }
    }
}

/// A probe of the vanishing-contraction recursion `V[k+1] = rho[k]^2 V[k]`.
pub struct VanishingContractionProbe<F: Fn(usize) -> f64> {
    pub rho: F,
    pub v0: f64,
    pub horizon: usize,
    /// The iterated value must fall below this by the end of the horizon.
    pub threshold: f64,
}

/// Result of iterating a contraction probe.
#[derive(Debug, Clone)]
pub struct ContractionProbeReport {
    /// Every step satisfied `0 <= V[k+1] <= V[k]`.
    pub monotone: bool,
    /// Every probed gain satisfied `|rho[k]| < 1`.
    pub rho_admissible: bool,
    pub v_final: f64,
    pub reached_threshold: bool,
    /// Independent route: `V0 * exp(2 sum ln |rho[i]|)`.
    pub closed_form_v_final: f64,
    pub matches_closed_form: bool,
}

impl ContractionProbeReport {
    pub fn pass(&self) -> bool {
        self.monotone && self.rho_admissible && self.reached_threshold && self.matches_closed_form
    }
}

/// Iterate the contraction recursion and compare against the closed-form
/// product computed through a log-sum route.
pub fn check_vanishing_contraction<F: Fn(usize) -> f64>(
    probe: &VanishingContractionProbe<F>,
) -> ContractionProbeReport {
    let mut v = probe.v0;
    let mut monotone = probe.v0 >= 0.0;
    let mut rho_admissible = true;
    let mut log_sum = 0.0f64;
    let mut hit_zero = false;
    for k in 0..probe.horizon {
        let rho = (probe.rho)(k);
        if rho.abs() >= 1.0 {
            rho_admissible = false;
        }
        if rho == 0.0 {
            hit_zero = true;
        } else {
            log_sum += 2.0 * rho.abs().ln();
        }
        let next = rho * rho * v;
        if !(next >= 0.0 && next <= v) {
            monotone = false;
        }
        v = next;
    }
    let closed_form = if hit_zero {
        0.0
    } else {
        probe.v0 * log_sum.exp()
    };
    let matches = if v == 0.0 || closed_form == 0.0 {
        // both routes underflow together
        v == closed_form
    } else {
        within(closed_form, v, PRODUCT_REL_TOL, 0.0)
    };
    ContractionProbeReport {
        monotone,
        rho_admissible,
        v_final: v,
        reached_threshold: v < probe.threshold,
        closed_form_v_final: closed_form,
        matches_closed_form: matches,
    }
}

/// Quantities re-derived from one row's raw state.
struct DerivedStep {
    e1: f64,
    e2: f64,
    rho2: f64,
    /// Normalized demand on x2 from the first design equation.
    t0: f64,
    x1: f64,
    chi1d_next: f64,
}

/// Re-derives the per-step quantities of a record from raw x columns only.
struct Rederivation {
    sys: LiftedSystem,
    rho1: f64,
    policy: Rho2Policy,
    cmd: CommandSignal,
    freeze: bool,
    switch_seen: Option<usize>,
}

impl Rederivation {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            sys: LiftedSystem::new(cfg.plant.clone(), cfg.pair1, cfg.pair2),
            rho1: cfg.rho1,
            policy: cfg.rho2_policy,
            cmd: cfg.command,
            freeze: cfg.freeze_command,
            switch_seen: None,
        }
    }

    fn chi_of_command(&self, k: usize) -> Result<f64> {
        let lp = self.sys.lift1(self.cmd.eval(k))?;
        Ok(self.sys.pair1().psi(lp.zeta))
    }

    /// Must be called with consecutive k starting at 0 so the switching
    /// commitment replays in order.
    fn derive(&mut self, k: usize, x1: f64, x2: f64) -> Result<DerivedStep> {
        let b = self.sys.bounds();
        let chi1 = self.sys.pair1().psi(self.sys.lift1(x1)?.zeta);
        let chi2 = self.sys.pair2().psi(self.sys.lift2(x2)?.zeta);
        let k1 = if self.freeze { k } else { k + 1 };
        let chi1d_k = self.chi_of_command(k)?;
        let chi1d_next = self.chi_of_command(k1)?;
        let e1 = chi1 - chi1d_k;
        let raw = match self.policy {
            Rho2Policy::Fixed(r) => r,
            Rho2Policy::Deadbeat => 0.0,
            Rho2Policy::Switching => rho2_switching(x2 + x1 - self.cmd.eval(k), b.x2_bar()),
        };
        let rho2 = if self.switch_seen.is_some() {
            0.0
        } else {
            if raw == 0.0 {
                self.switch_seen = Some(k);
            }
            raw
        };
        let x1_anchor = b.x1_bar() * chi1;
        let g1 = self.sys.plant().g1(x1_anchor);
        if g1 == 0.0 {
            return Err(Error::SingularG { gain: "g1" });
        }
        let t0 = (b.x1_bar() * (self.rho1 * e1 + chi1d_next) - self.sys.plant().f1(x1_anchor))
            / (b.x2_bar() * g1);
        Ok(DerivedStep {
            e1,
            e2: chi2 - t0,
            rho2,
            t0,
            x1: x1_anchor,
            chi1d_next,
        })
    }
}

/// Raw (k, x1, x2) triples of a record: all control rows plus the terminal
/// state when present.
fn raw_states(traj: &TrajectoryRecord) -> Vec<(usize, f64, f64)> {
    let mut out: Vec<(usize, f64, f64)> = traj.steps.iter().map(|r| (r.k, r.x1, r.x2)).collect();
    if let Some(t) = &traj.terminal {
        out.push((t.k, t.x1, t.x2));
    }
    out
}

/// Verify the per-step contraction identities and error recursions of a
/// trajectory:
///
/// - the virtual target enforces the first design equation, so the designed
///   one-step decrement of `V1 = e1^2 / 2` equals `(rho1^2 - 1) V1`;
/// - the realized decrement of `V2 = e2^2 / 2` equals `(rho2^2 - 1) V2`;
/// - `e2[k+1] = rho2[k] e2[k]`;
/// - `e1[k+1] = rho1 e1[k] + (x2_bar / x1_bar) g1(x1[k]) e2[k]`.
pub fn check_contraction_identities(
    traj: &TrajectoryRecord,
    cfg: &RunConfig,
) -> Result<CheckReport> {
    let mut red = Rederivation::new(cfg);
    let states = raw_states(traj);
    let derived: Vec<DerivedStep> = states
        .iter()
        .map(|&(k, x1, x2)| red.derive(k, x1, x2))
        .collect::<Result<_>>()?;

    let b = cfg.plant.bounds();
    let mut dv1 = IdentityTracker::new("dV1_identity", IDENTITY_REL_TOL, IDENTITY_ABS_TOL);
    let mut dv2 = IdentityTracker::new("dV2_identity", IDENTITY_REL_TOL, IDENTITY_ABS_TOL);
    let mut e2_rec = IdentityTracker::new("e2_recursion", RECURSION_TOL, RECURSION_TOL);
    let mut e1_rec = IdentityTracker::new("e1_recursion", RECURSION_TOL, RECURSION_TOL);

    for (i, d) in derived.iter().enumerate() {
        let k = states[i].0;
        let v1 = 0.5 * d.e1 * d.e1;
        let v2 = 0.5 * d.e2 * d.e2;

        // designed first step: substituting the virtual demand t0 back into
        // the lifted one-step map must contract e1 by exactly rho1
        let f1_virtual =
            cfg.plant.f1(d.x1) / b.x1_bar() + b.x2_bar() / b.x1_bar() * cfg.plant.g1(d.x1) * d.t0;
        let e1_designed = f1_virtual - d.chi1d_next;
        dv1.observe(
            k,
            (red.rho1 * red.rho1 - 1.0) * v1,
            0.5 * e1_designed * e1_designed - v1,
        );

        if let Some(next) = derived.get(i + 1) {
            dv2.observe(
                k,
                (d.rho2 * d.rho2 - 1.0) * v2,
                0.5 * next.e2 * next.e2 - v2,
            );
            e2_rec.observe(k, d.rho2 * d.e2, next.e2);
            e1_rec.observe(
                k,
                red.rho1 * d.e1 + b.x2_bar() / b.x1_bar() * cfg.plant.g1(d.x1) * d.e2,
                next.e1,
            );
        }
    }

    let mut report = CheckReport::default();
    report.lines.extend(dv1.into_lines());
    report.lines.extend(dv2.into_lines());
    report.lines.extend(e2_rec.into_lines());
    report.lines.extend(e1_rec.into_lines());
    Ok(report)
}

/// Verify forward invariance along a trajectory: every logged step keeps the
/// arguments of both lifting maps strictly inside the unit interval, and
/// whenever the composite second-step target was admissible at step k the
/// state at k+1 was liftable.
pub fn check_forward_invariance(traj: &TrajectoryRecord, cfg: &RunConfig) -> Result<CheckReport> {
    let sys = LiftedSystem::new(cfg.plant.clone(), cfg.pair1, cfg.pair2);
    let mut red = Rederivation::new(cfg);
    let states = raw_states(traj);
    let b = cfg.plant.bounds();

    let mut report = CheckReport::default();
    let mut f1_worst: Option<(usize, f64)> = None;
    let mut f2_worst: Option<(usize, f64)> = None;
    let mut implication_ok = true;
    let mut implication_step = None;

    for (i, &(k, x1, x2)) in states.iter().enumerate() {
        let d = red.derive(k, x1, x2)?;
        let z1 = sys.lift1(x1)?.z;
        let z2 = sys.lift2(x2)?.z;
        let f1 = crate::lifted_dynamics::f1_map(&sys, z1, z2)?;
        if f1_worst.is_none_or(|(_, w)| f1.abs() > w) {
            f1_worst = Some((k, f1.abs()));
        }
        // the input column only exists for control rows
        if let Some(row) = traj.steps.get(i).filter(|r| r.k == k) {
            let f2 = crate::lifted_dynamics::f2_map(&sys, z1, z2, row.u)?;
            if f2_worst.is_none_or(|(_, w)| f2.abs() > w) {
                f2_worst = Some((k, f2.abs()));
            }
            // Composite admissibility at k implies the x2 lift succeeds at k+1.
            let x1_next = b.x1_bar() * f1;
            let g1 = cfg.plant.g1(x1_next);
            if g1 != 0.0 {
                let chi1d_next2 = red.chi_of_command(if cfg.freeze_command { k } else { k + 2 })?;
                let e1_next = f1 - d.chi1d_next;
                let t1 = (b.x1_bar() * (cfg.rho1 * e1_next + chi1d_next2) - cfg.plant.f1(x1_next))
                    / (b.x2_bar() * g1);
                let lhs = (d.rho2 * d.e2 + t1).abs();
                if lhs < 1.0 {
                    // the state at k+1 lives in the next row, or in the
                    // failure bookkeeping when the run died there
                    let next_x2 = states.get(i + 1).map(|&(_, _, nx2)| nx2).or_else(|| {
                        traj.failure
                            .as_ref()
                            .filter(|f| f.step == k + 1)
                            .map(|f| f.x2)
                    });
                    let lifted = match next_x2 {
                        Some(nx2) => sys.lift2(nx2).is_ok(),
                        None => traj.failure.is_none(), // ran off the horizon
                    };
                    if !lifted && implication_ok {
                        implication_ok = false;
                        implication_step = Some(k);
                    }
                }
            }
        }
    }

    if let Some((k, worst)) = f1_worst {
        report.lines.push(CheckLine {
            check: "F1_admissible".into(),
            step: Some(k),
            expected: 1.0,
            actual: worst,
            tol: 0.0,
            pass: worst < 1.0,
        });
    }
    if let Some((k, worst)) = f2_worst {
        report.lines.push(CheckLine {
            check: "F2_admissible".into(),
            step: Some(k),
            expected: 1.0,
            actual: worst,
            tol: 0.0,
            pass: worst < 1.0,
        });
    }
    report.lines.push(CheckLine {
        check: "admissible_target_implies_next_lift".into(),
        step: implication_step,
        expected: 1.0,
        actual: if implication_ok { 1.0 } else { 0.0 },
        tol: 0.0,
        pass: implication_ok,
    });
    Ok(report)
}

/// Outcome of the deadbeat check.
#[derive(Debug, Clone)]
pub struct DeadbeatReport {
    pub k_s: usize,
    pub e2_zero_after: bool,
    pub e1_zero_within_two: bool,
    pub report: CheckReport,
}

impl DeadbeatReport {
    pub fn pass(&self) -> bool {
        self.e2_zero_after && self.e1_zero_within_two && self.report.pass()
    }
}

/// Tolerances of the deadbeat check: e2 is killed exactly one step after the
/// switch, e1 two steps after (for the double integrator).
pub const DEADBEAT_E2_TOL: f64 = 1e-12;
pub const DEADBEAT_E1_TOL: f64 = 1e-10;

/// Verify the conditional deadbeat property on a constant-command run: the
/// gain commits to zero at some finite step `k_s`, the second error is zero
/// for every later step, and the first error is zero from `k_s + 2` on.
pub fn check_deadbeat(traj: &TrajectoryRecord, cfg: &RunConfig) -> Result<DeadbeatReport> {
    let mut red = Rederivation::new(cfg);
    let states = raw_states(traj);
    let derived: Vec<DerivedStep> = states
        .iter()
        .map(|&(k, x1, x2)| red.derive(k, x1, x2))
        .collect::<Result<_>>()?;
    let k_s = red.switch_seen.ok_or(Error::NoSwitch)?;

    let mut report = CheckReport::default();
    let mut e2_tracker = IdentityTracker::new("deadbeat_e2_zero", 0.0, DEADBEAT_E2_TOL);
    let mut e1_tracker = IdentityTracker::new("deadbeat_e1_zero", 0.0, DEADBEAT_E1_TOL);
    for (i, d) in derived.iter().enumerate() {
        let k = states[i].0;
        if k > k_s {
            e2_tracker.observe(k, 0.0, d.e2);
        }
        if k >= k_s + 2 {
            e1_tracker.observe(k, 0.0, d.e1);
        }
    }
    let e2_lines = e2_tracker.into_lines();
    let e1_lines = e1_tracker.into_lines();
    let e2_zero_after = e2_lines.iter().all(|l| l.pass);
    let e1_zero_within_two = e1_lines.iter().all(|l| l.pass);
    report.lines.extend(e2_lines);
    report.lines.extend(e1_lines);
    Ok(DeadbeatReport {
        k_s,
        e2_zero_after,
        e1_zero_within_two,
        report,
    })
}
