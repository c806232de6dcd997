//! The one-step maps of the plant expressed in lifted coordinates, and
//! their closed-form inverses.
//!
//! With `x1 = x1_bar * psi1(z1 / x1_bar)` and `x2 = x2_bar * psi2(z2 / x2_bar)`,
//! the lifted dynamics read
//!
//! ```text
//! z1[k+1] = x1_bar * phi1( F1(z1, z2) )
//! z2[k+1] = x2_bar * phi2( F2(z1, z2, u) )
//! ```
//!
//! where `F1` and `F2` are the normalized next-state values computed below.
//! Both are affine in their last argument, so the inverses divide by the
//! corresponding gain instead of root-finding. Every inverse re-evaluates
//! the forward map at its result and fails loudly on drift.

use crate::error::{Error, Result};
use crate::lifting::{lift, SigmoidPair, StateBounds};
use crate::plant::StrictFeedbackPlant;

/// Tolerance for the always-on forward re-evaluation of inverse results.
const INVERSE_CHECK_TOL: f64 = 1e-10;

/// A plant together with the lifting pair chosen for each state channel.
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    plant: StrictFeedbackPlant,
    pair1: SigmoidPair,
    pair2: SigmoidPair,
}

impl LiftedSystem {
    pub fn new(plant: StrictFeedbackPlant, pair1: SigmoidPair, pair2: SigmoidPair) -> Self {
        Self {
            plant,
            pair1,
            pair2,
        }
    }

    pub fn plant(&self) -> &StrictFeedbackPlant {
        &self.plant
    }

    pub fn bounds(&self) -> StateBounds {
        self.plant.bounds()
    }

    pub fn pair1(&self) -> &SigmoidPair {
        &self.pair1
    }

    pub fn pair2(&self) -> &SigmoidPair {
        &self.pair2
    }

    /// x1 recovered from its lifted coordinate.
    pub fn x1_of(&self, z1: f64) -> f64 {
        let x1_bar = self.bounds().x1_bar();
        x1_bar * self.pair1.psi(z1 / x1_bar)
    }

    /// x2 recovered from its lifted coordinate.
    pub fn x2_of(&self, z2: f64) -> f64 {
        let x2_bar = self.bounds().x2_bar();
        x2_bar * self.pair2.psi(z2 / x2_bar)
    }

    /// Lift an x1 value.
    pub fn lift1(&self, x1: f64) -> Result<crate::lifting::LiftedPoint> {
        lift(x1, self.bounds().x1_bar(), &self.pair1)
    }

    /// Lift an x2 value.
    pub fn lift2(&self, x2: f64) -> Result<crate::lifting::LiftedPoint> {
        lift(x2, self.bounds().x2_bar(), &self.pair2)
    }
}

/// Normalized next x1: `F1 = f1(x1)/x1_bar + (x2_bar/x1_bar) g1(x1) psi2(zeta2)`.
///
/// Equals `x1[k+1] / x1_bar`, so the lifted step is well defined iff
/// `|F1| < 1`.
pub fn f1_map(sys: &LiftedSystem, z1: f64, z2: f64) -> Result<f64> {
    if !z1.is_finite() || !z2.is_finite() {
        return Err(Error::NonFinite {
            context: "F1 input",
        });
    }
    let b = sys.bounds();
    let x1 = sys.x1_of(z1);
    let psi2 = sys.pair2.psi(z2 / b.x2_bar());
    let v = sys.plant.f1(x1) / b.x1_bar() + b.x2_bar() / b.x1_bar() * sys.plant.g1(x1) * psi2;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            context: "F1 output",
        });
    }
    Ok(v)
}

/// Normalized next x2: `F2 = f2(x1, x2)/x2_bar + g2(x1, x2)/x2_bar * u`.
pub fn f2_map(sys: &LiftedSystem, z1: f64, z2: f64, u: f64) -> Result<f64> {
    if !z1.is_finite() || !z2.is_finite() || !u.is_finite() {
        return Err(Error::NonFinite {
            context: "F2 input",
        });
    }
    let b = sys.bounds();
    let x1 = sys.x1_of(z1);
    let x2 = sys.x2_of(z2);
    let v = sys.plant.f2(x1, x2) / b.x2_bar() + sys.plant.g2(x1, x2) / b.x2_bar() * u;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            context: "F2 output",
        });
    }
    Ok(v)
}

/// The normalized x2 value (`psi2` of the would-be virtual target) that makes
/// the next normalized x1 equal `y`, for the channel anchored at original
/// coordinate `x1`:
///
/// ```text
/// t = (x1_bar * y - f1(x1)) / (x2_bar * g1(x1))
/// ```
///
/// This is the algebra of [`f1_inverse`] without the admissibility check: the
/// value exists for any target, even when |t| >= 1 means no admissible x2 can
/// realize it. The controller needs the raw value during switching-gain
/// transients, where the composite target it feeds to the input channel stays
/// admissible even though `t` alone does not.
pub fn required_chi2(sys: &LiftedSystem, x1: f64, y: f64) -> Result<f64> {
    let b = sys.bounds();
    let g1 = sys.plant.g1(x1);
    if g1 == 0.0 {
        return Err(Error::SingularG { gain: "g1" });
    }
    let t = (b.x1_bar() * y - sys.plant.f1(x1)) / (b.x2_bar() * g1);
    if !t.is_finite() {
        return Err(Error::NonFinite {
            context: "required chi2",
        });
    }
    Ok(t)
}

/// Solve `F1(z1, z2) = y` for `z2` in closed form.
///
/// Fails with `Inadmissible` when the demanded normalized x2 leaves the unit
/// interval (minus the pair-2 guard band): the requested one-step move would
/// need `|x2| >= x2_bar`.
pub fn f1_inverse(sys: &LiftedSystem, z1: f64, y: f64) -> Result<f64> {
    if !z1.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite {
            context: "F1 inverse input",
        });
    }
    let b = sys.bounds();
    let t = required_chi2(sys, sys.x1_of(z1), y)?;
    if t.abs() >= 1.0 - sys.pair2.guard_band() {
        return Err(Error::Inadmissible { target: t });
    }
    let z2 = b.x2_bar() * sys.pair2.phi(t);
    let check = f1_map(sys, z1, z2)?;
    if (check - y).abs() > INVERSE_CHECK_TOL {
        return Err(Error::VerificationFailed {
            map: "F1 inverse",
            expected: y,
            actual: check,
        });
    }
    Ok(z2)
}

/// Solve `F2(z1, z2, u) = y` for the input in closed form:
/// `u = (x2_bar * y - f2(x1, x2)) / g2(x1, x2)`.
pub fn f2_inverse(sys: &LiftedSystem, z1: f64, z2: f64, y: f64) -> Result<f64> {
    if !z1.is_finite() || !z2.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite {
            context: "F2 inverse input",
        });
    }
    let b = sys.bounds();
    let x1 = sys.x1_of(z1);
    let x2 = sys.x2_of(z2);
    let g2 = sys.plant.g2(x1, x2);
    if g2 == 0.0 {
        return Err(Error::SingularG { gain: "g2" });
    }
    let u = (b.x2_bar() * y - sys.plant.f2(x1, x2)) / g2;
    if !u.is_finite() {
        return Err(Error::NonFinite {
            context: "F2 inverse output",
        });
    }
    let check = f2_map(sys, z1, z2, u)?;
    if (check - y).abs() > INVERSE_CHECK_TOL {
        return Err(Error::VerificationFailed {
            map: "F2 inverse",
            expected: y,
            actual: check,
        });
    }
    Ok(u)
}
