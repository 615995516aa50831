//! Steadily rotating spiral waves of the kinematic model.
//!
//! The steady curvature profile `κ(s)` of a rotating spiral is a phase-plane
//! orbit of `(l, v) = (ln κ, dl/ds)`. Solutions are found by two nested
//! shootings: the decaying separatrix for a fixed frequency, then the
//! frequency that places the tip data on the right arc of that orbit.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod model;
pub mod quadrature;
pub mod separatrix;
pub mod solver;

pub use error::{Error, Result};
