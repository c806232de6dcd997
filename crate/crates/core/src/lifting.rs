//! Constraint lifting: the x ↔ χ ↔ z ↔ ζ coordinate pipeline.
//!
//! A bounded state `|x| < x_bar` is normalized to `chi = x / x_bar` in the
//! open unit interval, lifted to the whole real line by `z = x_bar * phi(chi)`
//! where `phi` is the inverse of a strictly increasing odd sigmoid, and
//! recovered through `x = x_bar * psi(zeta)` with `zeta = z / x_bar`. Working
//! in the lifted coordinates turns a state-constrained problem into an
//! unconstrained one; the price is that `phi` blows up at the interval ends,
//! which is why lifting rejects inputs inside a configurable guard band of
//! the boundary instead of saturating them.

use crate::error::{Error, Result};

/// Default guard band for double precision. `phi` derivatives grow without
/// bound as |chi| -> 1, so the last ~1e-9 of the interval is treated as
/// numerically unusable.
pub const DEFAULT_GUARD_BAND: f64 = 1e-9;

/// Largest f64 strictly below 1. `psi` outputs are clamped to this magnitude
/// so that `x_bar * psi(zeta)` can never round onto the bound itself.
const MAX_BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// A strictly increasing odd sigmoid `psi: R -> (-1, 1)` paired with its
/// inverse `phi: (-1, 1) -> R`.
#[derive(Debug, Clone, Copy)]
pub struct SigmoidPair {
    name: &'static str,
    psi: fn(f64) -> f64,
    phi: fn(f64) -> f64,
    guard_band: f64,
}

impl SigmoidPair {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn guard_band(&self) -> f64 {
        self.guard_band
    }

    /// Same pair with a different guard band. Must lie in (0, 0.1).
    pub fn with_guard_band(self, guard_band: f64) -> Result<Self> {
        if !(guard_band > 0.0 && guard_band < 0.1) {
            return Err(Error::Config(format!(
                "guard band {guard_band} outside (0, 0.1)"
            )));
        }
        Ok(Self { guard_band, ..self })
    }

    /// The sigmoid itself. Strictly inside (-1, 1) for every finite input.
    pub fn psi(&self, z: f64) -> f64 {
        (self.psi)(z).clamp(-MAX_BELOW_ONE, MAX_BELOW_ONE)
    }

    /// The lifting map, inverse of `psi`. Defined on (-1, 1); unbounded at
    /// the ends. Callers are expected to stay clear of the boundary (see
    /// [`lift`]).
    pub fn phi(&self, chi: f64) -> f64 {
        (self.phi)(chi)
    }
}

/// Positive bounds defining the safe box `|x1| < x1_bar`, `|x2| < x2_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateBounds {
    x1_bar: f64,
    x2_bar: f64,
}

impl StateBounds {
    pub fn new(x1_bar: f64, x2_bar: f64) -> Result<Self> {
        if !(x1_bar > 0.0 && x1_bar.is_finite()) {
            return Err(Error::Config(format!(
                "x1 bound must be positive and finite, got {x1_bar}"
            )));
        }
        if !(x2_bar > 0.0 && x2_bar.is_finite()) {
            return Err(Error::Config(format!(
                "x2 bound must be positive and finite, got {x2_bar}"
            )));
        }
        Ok(Self { x1_bar, x2_bar })
    }

    pub fn x1_bar(&self) -> f64 {
        self.x1_bar
    }

    pub fn x2_bar(&self) -> f64 {
        self.x2_bar
    }
}

/// One state expressed simultaneously in all four coordinates of the
/// pipeline: original `x`, normalized `chi = x / x_bar`, lifted
/// `z = x_bar * phi(chi)` and auxiliary `zeta = z / x_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedPoint {
    pub x: f64,
    pub chi: f64,
    pub z: f64,
    pub zeta: f64,
}

/// Lift a bounded state into the unconstrained coordinate.
///
/// Rejects `|x| >= x_bar * (1 - guard_band)` with `DomainViolation` rather
/// than saturating: a state that close to the boundary means the invariance
/// machinery upstream has already failed, and clamping would hide it.
pub fn lift(x: f64, x_bar: f64, pair: &SigmoidPair) -> Result<LiftedPoint> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "lift input",
        });
    }
    if !(x_bar > 0.0 && x_bar.is_finite()) {
        return Err(Error::Config(format!(
            "bound must be positive and finite, got {x_bar}"
        )));
    }
    let chi = x / x_bar;
    let margin = 1.0 - pair.guard_band;
    if chi.abs() >= margin {
        return Err(Error::DomainViolation {
            value: x,
            limit: x_bar * margin,
            bound: x_bar,
        });
    }
    let zeta = pair.phi(chi);
    Ok(LiftedPoint {
        x,
        chi,
        z: x_bar * zeta,
        zeta,
    })
}

/// Map a lifted coordinate back to the bounded state.
///
/// The result satisfies `|x| < x_bar` strictly for every finite `z`.
pub fn unlift(z: f64, x_bar: f64, pair: &SigmoidPair) -> Result<LiftedPoint> {
    if !z.is_finite() {
        return Err(Error::NonFinite {
            context: "unlift input",
        });
    }
    if !(x_bar > 0.0 && x_bar.is_finite()) {
        return Err(Error::Config(format!(
            "bound must be positive and finite, got {x_bar}"
        )));
    }
    let zeta = z / x_bar;
    let chi = pair.psi(zeta);
    Ok(LiftedPoint {
        x: x_bar * chi,
        chi,
        z,
        zeta,
    })
}

/// The catalog of lifting pairs, selectable by name:
/// `tan`, `atanh`, `rational`, `algebraic`, `erf`, `gudermannian`.
pub fn catalog() -> [SigmoidPair; 6] {
    [
        SigmoidPair {
            name: "tan",
            psi: psi_tan,
            phi: phi_tan,
            guard_band: DEFAULT_GUARD_BAND,
        },
        SigmoidPair {
            name: "atanh",
            psi: psi_atanh,
            phi: phi_atanh,
            guard_band: DEFAULT_GUARD_BAND,
        },
        SigmoidPair {
            name: "rational",
            psi: psi_rational,
            phi: phi_rational,
            guard_band: DEFAULT_GUARD_BAND,
        },
        SigmoidPair {
            name: "algebraic",
            psi: psi_algebraic,
            phi: phi_algebraic,
            guard_band: DEFAULT_GUARD_BAND,
        },
        SigmoidPair {
            name: "erf",
            psi: psi_erf,
            phi: phi_erf,
            guard_band: DEFAULT_GUARD_BAND,
        },
        SigmoidPair {
            name: "gudermannian",
            psi: psi_gudermannian,
            phi: phi_gudermannian,
            guard_band: DEFAULT_GUARD_BAND,
        },
    ]
}

/// Look up a catalog pair by name.
pub fn by_name(name: &str) -> Option<SigmoidPair> {
    catalog().into_iter().find(|p| p.name == name)
}

// phi(x) = tan(pi x / 2), psi(z) = (2/pi) atan(z)

fn phi_tan(x: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * x).tan()
}

fn psi_tan(z: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * z.atan()
}

// phi(x) = atanh(x), psi(z) = tanh(z)

fn phi_atanh(x: f64) -> f64 {
    x.atanh()
}

fn psi_atanh(z: f64) -> f64 {
    z.tanh()
}

// phi(x) = x / (1 - |x|), psi(z) = z / (1 + |z|)

fn phi_rational(x: f64) -> f64 {
    x / (1.0 - x.abs())
}

fn psi_rational(z: f64) -> f64 {
    if z.is_infinite() {
        return z.signum();
    }
    z / (1.0 + z.abs())
}

// phi(x) = x / sqrt(1 - x^2), psi(z) = z / sqrt(1 + z^2)

fn phi_algebraic(x: f64) -> f64 {
    // (1 - x)(1 + x) keeps precision near the boundary.
    x / ((1.0 - x) * (1.0 + x)).sqrt()
}

fn psi_algebraic(z: f64) -> f64 {
    if z.is_infinite() {
        return z.signum();
    }
    // hypot avoids overflow of z^2.
    z / 1.0f64.hypot(z)
}

// phi(x) = (2/sqrt(pi)) erfinv(x), psi(z) = erf(sqrt(pi) z / 2)

fn phi_erf(x: f64) -> f64 {
    2.0 / std::f64::consts::PI.sqrt() * erf_inv(x)
}

fn psi_erf(z: f64) -> f64 {
    libm::erf(std::f64::consts::PI.sqrt() / 2.0 * z)
}

// phi(x) = (2/pi) asinh(tan(pi x / 2)), psi(z) = (2/pi) atan(sinh(pi z / 2))

fn phi_gudermannian(x: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * (std::f64::consts::FRAC_PI_2 * x).tan().asinh()
}

fn psi_gudermannian(z: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * (std::f64::consts::FRAC_PI_2 * z).sinh().atan()
}

/// Inverse error function.
///
/// Polynomial seed (M. Giles' single-precision fit) refined by two Newton
/// steps against `libm::erf`; erfinv has no closed form and the seed alone
/// is far from the round-trip accuracy the lifting contract needs.
fn erf_inv(x: f64) -> f64 {
    if x == 0.0 {
        return x; // preserves signed zero
    }
    if x >= 1.0 {
        return f64::INFINITY;
    }
    if x <= -1.0 {
        return f64::NEG_INFINITY;
    }
    let w = -((1.0 - x) * (1.0 + x)).ln();
    let mut y = if w < 5.0 {
        let w = w - 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 2.185_808_7e-04 + p * w;
        p = -1.253_725_03e-03 + p * w;
        p = -4.177_681_64e-03 + p * w;
        p = 2.466_407_27e-01 + p * w;
        p = 1.501_409_41 + p * w;
        p * x
    } else {
        let w = w.sqrt() - 3.0;
        let mut p = -2.002_142_57e-04;
        p = 1.009_505_58e-04 + p * w;
        p = 1.349_343_22e-03 + p * w;
        p = -3.673_428_44e-03 + p * w;
        p = 5.739_507_73e-03 + p * w;
        p = -7.622_461_3e-03 + p * w;
        p = 9.438_870_47e-03 + p * w;
        p = 1.001_674_06 + p * w;
        p = 2.832_976_82 + p * w;
        p * x
    };
    // Newton on erf(y) - x = 0; quadratic convergence from a ~1e-7 seed.
    let half_sqrt_pi = std::f64::consts::PI.sqrt() / 2.0;
    for _ in 0..2 {
        let err = libm::erf(y) - x;
        y -= err * half_sqrt_pi * (y * y).exp();
    }
    y
}
