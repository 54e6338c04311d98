use serde::{Deserialize, Serialize};

use super::{rk4_step, Plant, PlantState};
use crate::error::{Error, Result};

/// Pendulum parameters. The friction coefficient default (0.5 N·m·s/rad) is a
/// modelling choice, not a measured value; closed-loop numbers depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumParams {
    /// Mass in kg.
    pub m: f64,
    /// Radius in m.
    pub r: f64,
    /// Gravitational acceleration in m/s².
    pub grav: f64,
    /// Viscous friction in N·m·s/rad.
    pub k: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            r: 0.2,
            grav: 9.81,
            k: 0.5,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(Error::config("plant.m", "mass must be positive"));
        }
        if !(self.r > 0.0) {
            return Err(Error::config("plant.r", "radius must be positive"));
        }
        if !(self.k >= 0.0) {
            return Err(Error::config("plant.k", "friction must be non-negative"));
        }
        if !self.grav.is_finite() {
            return Err(Error::config("plant.grav", "must be finite"));
        }
        Ok(())
    }

    /// Mechanical energy ½ m r² ω² + m g r (1 − cos θ).
    pub fn energy(&self, x: &[f64]) -> f64 {
        0.5 * self.m * self.r * self.r * x[1] * x[1] + self.m * self.grav * self.r * (1.0 - x[0].cos())
    }
}

/// State derivative: `(θ̇, ω̇) = (ω, −(g/r) sin θ − k/(m r) ω + τ/(m r))`.
pub fn pendulum_deriv(p: &PendulumParams, x: &[f64], tau: f64) -> [f64; 2] {
    [
        x[1],
        -(p.grav / p.r) * x[0].sin() - p.k / (p.m * p.r) * x[1] + tau / (p.m * p.r),
    ]
}

/// The pendulum as a plant: input torque, output angle (rad).
#[derive(Debug, Clone, PartialEq)]
pub struct Pendulum {
    pub params: PendulumParams,
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl Plant for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0]]
    }

    fn advance(&self, state: &PlantState, u: &[f64], dt: f64, substeps: usize) -> Result<PlantState> {
        let h = dt / substeps as f64;
        let mut s = state.clone();
        for _ in 0..substeps {
            s = rk4_step(|x, u| pendulum_deriv(&self.params, x, u[0]).to_vec(), &s, u, h)?;
        }
        Ok(s)
    }
}
