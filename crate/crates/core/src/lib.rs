//! Data-driven predictive control.
//!
//! Three controllers share one closed-loop harness:
//!
//! * [`deepc`]: behavioral (Hankel-matrix) predictive control with slack and
//!   an artificial setpoint,
//! * [`koopman`]: the same idea applied to radial-basis lifted states,
//! * [`mfapc`]: model-free adaptive predictive control on a compact-form
//!   dynamic linearization.
//!
//! The QP-based controllers run on the dense solver in [`qp`]; [`plants`]
//! provides the pendulum and LTI test systems, and [`harness`] runs and scores
//! closed-loop experiments.

// NaN-rejecting checks are written as `!(x > 0.0)`; index loops mirror the
// block layout of the assembled matrices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod controller;
pub mod deepc;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod io;
pub mod koopman;
pub mod mfapc;
pub mod plants;
pub mod qp;
pub mod signals;
#[cfg(any(test, feature = "oracles"))]
pub mod testing;

pub use controller::{Controller, Observation, StepOutput};
pub use error::{Error, Result};
pub use harness::{Metrics, Reference, RunResult};
pub use qp::{QpProblem, QpSolution, QpStatus};
pub use signals::{DataBuffer, HankelView, Trajectory};
