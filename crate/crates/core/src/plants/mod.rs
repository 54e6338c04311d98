//! Simulated plants: the pendulum benchmark, LTI test systems, and scenario
//! perturbations, integrated with fixed-step RK4.

mod integrate;
mod lti;
mod pendulum;
mod scenario;

pub use integrate::{rk4_step, PlantState};
pub use lti::{expm, make_lti, make_random_stable_lti, spectral_radius, LtiPlant, TimeDomain};
pub use pendulum::{pendulum_deriv, Pendulum, PendulumParams};
pub use scenario::{sample_step, GainDrift, Scenario};

use crate::error::Result;

/// A sampled plant: the harness only needs to advance it under held input and
/// read its output.
pub trait Plant: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn output(&self, x: &[f64]) -> Vec<f64>;
    /// Advances by `dt` using `substeps` integration steps (ignored by
    /// discrete-time plants).
    fn advance(&self, state: &PlantState, u: &[f64], dt: f64, substeps: usize) -> Result<PlantState>;
}
