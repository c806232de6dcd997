//! Two-step backstepping in lifted coordinates.
//!
//! The first step turns the tracking error `e1` into a virtual target for
//! x2; the second step computes the input that makes the normalized next x2
//! equal `rho2 * e2` plus the next virtual target value. With `|rho1| < 1`
//! and `|rho2[k]| < 1` both error recursions contract; `rho = 0` kills the
//! corresponding error in one step (deadbeat).
//!
//! The controller looks two command samples ahead: the input at step k
//! shapes x2 at k+1, which in turn aims x1 at k+2.

use crate::error::{Error, Result};
use crate::lifted_dynamics::{f1_map, f2_inverse, required_chi2, LiftedSystem};
use crate::plant::PlantState;

/// Command signal for the tracked channel. Evaluable at any step index
/// because the control law needs the command at k, k+1 and k+2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommandSignal {
    Constant(f64),
    /// `x1d(k) = amplitude * sin(omega * k)`, omega in rad/step.
    Sinusoid {
        amplitude: f64,
        omega: f64,
    },
}

impl CommandSignal {
    pub fn eval(&self, k: usize) -> f64 {
        match *self {
            CommandSignal::Constant(v) => v,
            CommandSignal::Sinusoid { amplitude, omega } => amplitude * (omega * k as f64).sin(),
        }
    }

    /// The command must stay strictly inside the x1 bound at every step.
    pub fn validate(&self, x1_bar: f64) -> Result<()> {
        let peak = match *self {
            CommandSignal::Constant(v) => v.abs(),
            CommandSignal::Sinusoid { amplitude, .. } => amplitude.abs(),
        };
        if !peak.is_finite() || peak >= x1_bar {
            return Err(Error::Config(format!(
                "command peak {peak} must be strictly below the x1 bound {x1_bar}"
            )));
        }
        Ok(())
    }

    /// Parse `const:0.5` or `sin:A=0.5,omega=0.5`.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(v) = spec.strip_prefix("const:") {
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Config(format!("bad constant command '{spec}'")))?;
            return Ok(CommandSignal::Constant(v));
        }
        if let Some(rest) = spec.strip_prefix("sin:") {
            let mut amplitude = None;
            let mut omega = None;
            for part in rest.split(',') {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("bad command component '{part}'")))?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number in '{part}'")))?;
                match key.trim() {
                    "A" | "a" | "amplitude" => amplitude = Some(value),
                    "omega" | "w" => omega = Some(value),
                    other => return Err(Error::Config(format!("unknown command key '{other}'"))),
                }
            }
            return Ok(CommandSignal::Sinusoid {
                amplitude: amplitude.ok_or_else(|| Error::Config("sinusoid needs A=".into()))?,
                omega: omega.ok_or_else(|| Error::Config("sinusoid needs omega=".into()))?,
            });
        }
        Err(Error::Config(format!(
            "command '{spec}' is neither const:<v> nor sin:A=<a>,omega=<w>"
        )))
    }
}

/// Gain policy for the second backstepping step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho2Policy {
    Fixed(f64),
    /// The state-dependent law: 0 while `|dx| < x2_bar`, else
    /// `1 - x2_bar / (2 |dx|)` with `dx = x2 + x1 - x1d(k)`.
    Switching,
    Deadbeat,
}

impl Rho2Policy {
    /// Parse `fixed:0.5`, `switching` or `deadbeat`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "switching" => Ok(Rho2Policy::Switching),
            "deadbeat" => Ok(Rho2Policy::Deadbeat),
            other => {
                if let Some(v) = other.strip_prefix("fixed:") {
                    let v: f64 = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad gain '{spec}'")))?;
                    Ok(Rho2Policy::Fixed(v))
                } else {
                    Err(Error::Config(format!(
                        "rho2 policy '{spec}' is none of switching, deadbeat, fixed:<v>"
                    )))
                }
            }
        }
    }
}

/// The switching gain law. Returns a value in [0, 1); ties at
/// `|dx| = x2_bar` take the nonzero branch.
pub fn rho2_switching(delta_x: f64, x2_bar: f64) -> f64 {
    if delta_x.abs() < x2_bar {
        0.0
    } else {
        1.0 - x2_bar / (2.0 * delta_x.abs())
    }
}

/// First-step gain plus the second-step gain policy, with switch-time
/// bookkeeping. A run owns its schedule exclusively; once the policy first
/// emits zero the schedule commits to zero permanently and records the step.
/// If the raw switching law would later disagree, the step is recorded as a
/// violation instead of being emitted.
#[derive(Debug, Clone)]
pub struct GainSchedule {
    rho1: f64,
    policy: Rho2Policy,
    switch_step: Option<usize>,
    violation_step: Option<usize>,
}

impl GainSchedule {
    pub fn new(rho1: f64, policy: Rho2Policy) -> Result<Self> {
        if !(rho1.is_finite() && rho1.abs() < 1.0) {
            return Err(Error::Config(format!("|rho1| must be < 1, got {rho1}")));
        }
        if let Rho2Policy::Fixed(r) = policy {
            if !(r.is_finite() && r.abs() < 1.0) {
                return Err(Error::Config(format!("|rho2| must be < 1, got {r}")));
            }
        }
        Ok(Self {
            rho1,
            policy,
            switch_step: None,
            violation_step: None,
        })
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn policy(&self) -> Rho2Policy {
        self.policy
    }

    /// First step at which the emitted gain became (and stays) zero.
    pub fn switch_step(&self) -> Option<usize> {
        self.switch_step
    }

    /// First step after the switch at which the raw switching law disagreed
    /// with the committed zero, if any.
    pub fn violation_step(&self) -> Option<usize> {
        self.violation_step
    }

    /// Gain for step `k` given the current `dx = x2 + x1 - x1d(k)`.
    pub fn rho2_at(&mut self, k: usize, delta_x: f64, x2_bar: f64) -> f64 {
        let raw = match self.policy {
            Rho2Policy::Fixed(r) => r,
            Rho2Policy::Deadbeat => 0.0,
            Rho2Policy::Switching => rho2_switching(delta_x, x2_bar),
        };
        if let Some(ks) = self.switch_step {
            debug_assert!(k >= ks);
            if raw != 0.0 && self.violation_step.is_none() {
                self.violation_step = Some(k);
            }
            return 0.0;
        }
        if raw == 0.0 {
            self.switch_step = Some(k);
        }
        raw
    }
}

/// Everything the control law decides at one step.
#[derive(Debug, Clone, Copy)]
pub struct ControlDecision {
    pub u: f64,
    pub e1: f64,
    pub e2: f64,
    /// Lifted virtual target for x2 at the current step. `None` when the
    /// demanded x2 lies outside its bound, which happens transiently under
    /// the switching gain; the normalized demand is still folded into `e2`.
    pub z2d: Option<f64>,
    pub rho2_k: f64,
    /// Normalized next x1 the plant will produce: the value the first
    /// lifting map sees at k+1. Inside (-1, 1) iff the step stays admissible.
    pub predicted_f1: f64,
    /// Normalized next x2 the input enforces: the value the second lifting
    /// map sees at k+1. Strictly inside (-1, 1) whenever a decision is
    /// returned.
    pub predicted_psi2_target: f64,
}

/// Tracking error of the first channel: `psi1(zeta1) - psi1(zeta1d)`,
/// which equals `(x1 - x1d) / x1_bar` by construction.
pub fn error_e1(sys: &LiftedSystem, z1: f64, cmd: &CommandSignal, k: usize) -> Result<f64> {
    let x1_bar = sys.bounds().x1_bar();
    let zeta1d = sys.lift1(cmd.eval(k))?.zeta;
    Ok(sys.pair1().psi(z1 / x1_bar) - sys.pair1().psi(zeta1d))
}

/// Second-channel error against a lifted virtual target:
/// `psi2(zeta2) - psi2(zeta2d)` = `(x2 - x2d) / x2_bar`.
pub fn error_e2(sys: &LiftedSystem, z2: f64, z2d: f64) -> f64 {
    let x2_bar = sys.bounds().x2_bar();
    sys.pair2().psi(z2 / x2_bar) - sys.pair2().psi(z2d / x2_bar)
}

/// Lifted virtual target for x2 at the current step:
/// `z2d = F1_inverse(z1, rho1 * e1 + psi1(zeta1d at k+1))`.
pub fn virtual_target_z2d(
    sys: &LiftedSystem,
    z1: f64,
    e1: f64,
    cmd: &CommandSignal,
    k: usize,
    rho1: f64,
) -> Result<f64> {
    let zeta1d_next = sys.lift1(cmd.eval(k + 1))?.zeta;
    let y = rho1 * e1 + sys.pair1().psi(zeta1d_next);
    crate::lifted_dynamics::f1_inverse(sys, z1, y)
}

/// The full control law at one step.
///
/// Command lookahead: `x1d` is evaluated at k+1 and k+2 (the input chooses
/// x2 at k+1, which aims x1 at k+2). With `freeze_command` the lookahead
/// samples are frozen at the current command value, reproducing the
/// constant-command simplification for time-varying references at the cost
/// of a phase lag.
pub fn control(
    sys: &LiftedSystem,
    s: &PlantState,
    cmd: &CommandSignal,
    gains: &mut GainSchedule,
    freeze_command: bool,
) -> Result<ControlDecision> {
    let b = sys.bounds();
    let k = s.k;
    let lp1 = sys.lift1(s.x1)?;
    let lp2 = sys.lift2(s.x2)?;

    let x1d_k = cmd.eval(k);
    let x1d_k1 = if freeze_command {
        x1d_k
    } else {
        cmd.eval(k + 1)
    };
    let x1d_k2 = if freeze_command {
        x1d_k
    } else {
        cmd.eval(k + 2)
    };

    let chi1 = sys.pair1().psi(lp1.zeta);
    let chi2 = sys.pair2().psi(lp2.zeta);
    let chi1d_k = sys.pair1().psi(sys.lift1(x1d_k)?.zeta);
    let chi1d_k1 = sys.pair1().psi(sys.lift1(x1d_k1)?.zeta);
    let chi1d_k2 = sys.pair1().psi(sys.lift1(x1d_k2)?.zeta);

    let e1 = chi1 - chi1d_k;
    let rho1 = gains.rho1();
    let rho2 = gains.rho2_at(k, s.x2 + s.x1 - x1d_k, b.x2_bar());

    // Current virtual target in normalized form. The raw value is kept even
    // when it leaves the unit interval: during the switching transient the
    // second-step error is measured against the unattainable demand, and the
    // gain law is what keeps the composite target admissible.
    let x1_via_psi = b.x1_bar() * chi1;
    let t0 = required_chi2(sys, x1_via_psi, rho1 * e1 + chi1d_k1)?;
    let e2 = chi2 - t0;
    let z2d = if t0.abs() < 1.0 - sys.pair2().guard_band() {
        Some(b.x2_bar() * sys.pair2().phi(t0))
    } else {
        None
    };

    // One-step prediction: F1 is the normalized x1 at k+1, exact because the
    // plant step is the same arithmetic.
    let f1_now = f1_map(sys, lp1.z, lp2.z)?;
    let e1_next = f1_now - chi1d_k1;
    let x1_next = b.x1_bar() * f1_now;
    let t1 = required_chi2(sys, x1_next, rho1 * e1_next + chi1d_k2)?;

    let target = rho2 * e2 + t1;
    if target.abs() >= 1.0 - sys.pair2().guard_band() {
        // the input would push x2 onto or past its bound at k+1
        return Err(Error::Inadmissible { target });
    }
    let u = f2_inverse(sys, lp1.z, lp2.z, target)?;

    Ok(ControlDecision {
        u,
        e1,
        e2,
        z2d,
        rho2_k: rho2,
        predicted_f1: f1_now,
        predicted_psi2_target: target,
    })
}
