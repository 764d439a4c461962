//! Guaranteed (set-membership) identification of time-varying parameters in
//! linear models `y = φᵀθ + u` where both the regressor `φ` and the additive
//! term `u` are only known through elementwise bounds.
//!
//! The estimate at every step is a zonotope that provably contains every
//! parameter consistent with the data seen so far. Two update strategies are
//! provided and selected by name through [`estimators::Registry`]:
//!
//! * `cazi` processes one measurement at a time: it intersects the prior
//!   zonotope with the two-halfspace cone the measurement defines, bounds
//!   that intersection by two minimal support strips, and keeps the smallest
//!   of the zonotope-strip overbounds.
//! * `pazi` processes mini-batches: all support strips of a batch are bundled
//!   and a gain matrix chosen by an LMI program contracts a P-weighted radius.
//!
//! An exact planar feasible-set oracle ([`oracle`]) and a turbocharger
//! health-monitoring model ([`engine`]) complete the toolkit.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Test fixtures contain 0.5235, which is data rather than π/6.
#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod candidates;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod io;
pub mod lmi;
pub mod lp;
pub mod oracle;
pub mod strips;

pub use candidates::{LambdaGain, StripBundle};
pub use estimators::{EstimatorConfig, MeasurementRecord, Registry};
pub use geometry::{Halfspace, PMatrix, Strip, Zonotope};
