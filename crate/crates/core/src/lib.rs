//! Constraint-lifting control for discrete-time strict-feedback systems.
//!
//! A bounded state is mapped onto the whole real line through the inverse of
//! a strictly increasing sigmoid, a two-step backstepping law is synthesized
//! in the lifted coordinates, and the result is mapped back — so the closed
//! loop tracks its command while the states provably never leave their box.
//! The crate provides:
//!
//! - [`lifting`]: the sigmoid catalog and the x ↔ χ ↔ z ↔ ζ pipeline;
//! - [`plant`]: the strict-feedback system class and the double integrator;
//! - [`lifted_dynamics`]: the lifted one-step maps and their closed-form
//!   inverses;
//! - [`controller`]: tracking errors, virtual targets, the control law and
//!   the gain policies including the state-dependent switching law;
//! - [`admissibility`]: the admissible sets, per-step reports and region
//!   sampling;
//! - [`sim`]: closed-loop runs, seeded initial-condition sampling and Monte
//!   Carlo batches, with CSV emission;
//! - [`verify`]: executable oracles for the contraction identities, forward
//!   invariance and the deadbeat property.

pub mod admissibility;
pub mod controller;
pub mod csvio;
mod error;
pub mod lifted_dynamics;
pub mod lifting;
pub mod plant;
pub mod rng;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
