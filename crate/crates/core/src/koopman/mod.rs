//! Willems–Koopman predictive control: the behavioral tracking problem posed
//! on radial-basis lifted states.

mod lifter;
mod wkpc;

pub use lifter::{make_lifter, rbf, Lifter};
pub use wkpc::{LiftSource, Wkpc, WkpcConfig, DIAGNOSTIC_COLUMNS};
