use thiserror::Error;

/// Errors produced by the lifting pipeline, the lifted dynamics and the
/// closed-loop machinery built on top of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state is on or outside the numerically safe interior of its bound,
    /// so the lifting map cannot be applied.
    #[error("domain violation: |{value}| >= {limit} (bound {bound})")]
    DomainViolation {
        /// Offending value (original coordinates).
        value: f64,
        /// Numerically safe limit, `bound * (1 - guard_band)`.
        limit: f64,
        /// The underlying state bound.
        bound: f64,
    },

    /// A quantity that must be finite is NaN or infinite.
    #[error("non-finite value in {context}")]
    NonFinite {
        /// Where the value appeared.
        context: &'static str,
    },

    /// An inverse map was asked for a target outside the open unit interval,
    /// i.e. the demanded one-step move requires a state or input that the
    /// bounds cannot accommodate.
    #[error("inadmissible target {target}: required sigmoid value leaves (-1, 1)")]
    Inadmissible {
        /// The demanded normalized value.
        target: f64,
    },

    /// A control-channel gain function evaluated to zero, so the affine
    /// inverse does not exist at this state.
    #[error("singular gain {gain} at the evaluated state")]
    SingularG {
        /// Which gain vanished ("g1" or "g2").
        gain: &'static str,
    },

    /// Re-evaluating a forward map at an inverse's result did not reproduce
    /// the requested target.
    #[error("inverse verification failed for {map}: expected {expected}, got {actual}")]
    VerificationFailed {
        map: &'static str,
        expected: f64,
        actual: f64,
    },

    /// Invalid configuration (bounds, gains, commands, horizons).
    #[error("configuration error: {0}")]
    Config(String),

    /// Rejection sampling gave up after the stated number of attempts.
    #[error("rejection sampling exhausted after {attempts} attempts")]
    Exhausted { attempts: u64 },

    /// The gain policy never committed to the deadbeat value within the run.
    #[error("gain policy never switched to deadbeat within the horizon")]
    NoSwitch,
}

pub type Result<T> = std::result::Result<T, Error>;
