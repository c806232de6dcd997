//! Discrete-time strict-feedback plants.
//!
//! The system class is
//!
//! ```text
//! x1[k+1] = f1(x1[k]) + g1(x1[k]) * x2[k]
//! x2[k+1] = f2(x1[k], x2[k]) + g2(x1[k], x2[k]) * u[k]
//! ```
//!
//! with both states confined to a box of [`StateBounds`]. The gains `g1`,
//! `g2` must be nonvanishing on the box so the affine inverses used by the
//! controller exist.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lifting::StateBounds;

type Map1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Map2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A strict-feedback plant: the four maps plus the safe-set bounds.
#[derive(Clone)]
pub struct StrictFeedbackPlant {
    name: &'static str,
    f1: Map1,
    g1: Map1,
    f2: Map2,
    g2: Map2,
    bounds: StateBounds,
}

impl fmt::Debug for StrictFeedbackPlant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrictFeedbackPlant")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .finish()
    }
}

/// State of a plant at step `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub x1: f64,
    pub x2: f64,
    pub k: usize,
}

impl PlantState {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2, k: 0 }
    }
}

/// Number of samples per axis in the construction-time nonvanishing scan.
const GAIN_SCAN: usize = 101;

impl StrictFeedbackPlant {
    /// Build a plant from its maps, checking that `g1` and `g2` do not
    /// vanish on the safe box. The check samples a 101x101 midpoint grid
    /// over the (open) box; it is a sanity screen, not a proof.
    pub fn new(
        name: &'static str,
        f1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f2: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        g2: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        bounds: StateBounds,
    ) -> Result<Self> {
        let plant = Self {
            name,
            f1: Arc::new(f1),
            g1: Arc::new(g1),
            f2: Arc::new(f2),
            g2: Arc::new(g2),
            bounds,
        };
        plant.check_gains_nonvanishing()?;
        Ok(plant)
    }

    fn check_gains_nonvanishing(&self) -> Result<()> {
        let grid = |bar: f64, i: usize| -bar + 2.0 * bar * (i as f64 + 0.5) / GAIN_SCAN as f64;
        for i in 0..GAIN_SCAN {
            let x1 = grid(self.bounds.x1_bar(), i);
            if (self.g1)(x1) == 0.0 {
                return Err(Error::Config(format!("g1 vanishes at x1 = {x1}")));
            }
            for j in 0..GAIN_SCAN {
                let x2 = grid(self.bounds.x2_bar(), j);
                if (self.g2)(x1, x2) == 0.0 {
                    return Err(Error::Config(format!("g2 vanishes at ({x1}, {x2})")));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn bounds(&self) -> StateBounds {
        self.bounds
    }

    pub fn f1(&self, x1: f64) -> f64 {
        (self.f1)(x1)
    }

    pub fn g1(&self, x1: f64) -> f64 {
        (self.g1)(x1)
    }

    pub fn f2(&self, x1: f64, x2: f64) -> f64 {
        (self.f2)(x1, x2)
    }

    pub fn g2(&self, x1: f64, x2: f64) -> f64 {
        (self.g2)(x1, x2)
    }
}

/// One step of the open-loop map. No constraint enforcement here: the plant
/// itself does not know it is supposed to stay in the box.
pub fn step(plant: &StrictFeedbackPlant, s: &PlantState, u: f64) -> Result<PlantState> {
    if !s.x1.is_finite() || !s.x2.is_finite() || !u.is_finite() {
        return Err(Error::NonFinite {
            context: "plant step input",
        });
    }
    let x1 = plant.f1(s.x1) + plant.g1(s.x1) * s.x2;
    let x2 = plant.f2(s.x1, s.x2) + plant.g2(s.x1, s.x2) * u;
    if !x1.is_finite() || !x2.is_finite() {
        return Err(Error::NonFinite {
            context: "plant step output",
        });
    }
    Ok(PlantState { x1, x2, k: s.k + 1 })
}

/// `true` iff the state is strictly inside the safe box.
pub fn in_safe_set(plant: &StrictFeedbackPlant, s: &PlantState) -> bool {
    s.x1.abs() < plant.bounds.x1_bar() && s.x2.abs() < plant.bounds.x2_bar()
}

/// The double integrator: `x1[k+1] = x1[k] + x2[k]`, `x2[k+1] = x2[k] + u[k]`.
pub fn double_integrator(x1_bar: f64, x2_bar: f64) -> Result<StrictFeedbackPlant> {
    let bounds = StateBounds::new(x1_bar, x2_bar)?;
    StrictFeedbackPlant::new(
        "double-integrator",
        |x1| x1,
        |_| 1.0,
        |_, x2| x2,
        |_, _| 1.0,
        bounds,
    )
}

/// Plants selectable by name from configuration. Custom plants are
/// constructed programmatically through [`StrictFeedbackPlant::new`].
pub fn by_name(name: &str, x1_bar: f64, x2_bar: f64) -> Result<StrictFeedbackPlant> {
    match name {
        "double-integrator" => double_integrator(x1_bar, x2_bar),
        other => Err(Error::Config(format!("unknown plant '{other}'"))),
    }
}
