//! Model-free adaptive predictive control on the compact-form dynamic
//! linearization `Δy_{k+1} = φ_k Δu_k`.
//!
//! Each step updates the PPD estimate `φ̂_k`, adapts the forecaster that
//! extrapolates it over the horizon, and applies the first increment of the
//! closed-form minimizer of `‖Y* − E y_k − A ΔU‖² + λ‖ΔU‖²`.

mod estimator;
mod forecaster;
mod law;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use estimator::PpdEstimator;
pub use forecaster::PpdForecaster;
pub use law::{control_increments, prediction_matrix};

use crate::controller::{seconds_to_samples, Controller, Diag, Observation, StepOutput};
use crate::error::{Error, Result};

pub const DIAGNOSTIC_COLUMNS: &[&str] = &["step", "phi_hat", "guard_fired", "norm_theta", "delta_u", "compute_time_s"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfapcConfig {
    pub n_s: f64,
    pub lambda: f64,
    /// Gain on the applied increment.
    #[serde(default = "one")]
    pub rho: f64,
    pub mu: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Initial and reset value of the PPD estimate.
    pub phi0: f64,
    /// Initial and reset value of the forecaster coefficients.
    pub theta0: Vec<f64>,
    pub n_m: usize,
    /// Forecaster reset bound; defaults to `10‖θ₀‖ + 1`.
    #[serde(default)]
    pub m_bound: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl MfapcConfig {
    pub fn benchmark() -> Self {
        Self {
            n_s: 0.5,
            lambda: 0.37,
            rho: 1.0,
            mu: 1.0,
            eta: 1.0,
            epsilon: 1e-5,
            delta: 0.5,
            phi0: 0.1,
            theta0: vec![0.175; 4],
            n_m: 4,
            m_bound: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mfapc.lambda", self.lambda),
            ("mfapc.mu", self.mu),
            ("mfapc.epsilon", self.epsilon),
            ("mfapc.delta", self.delta),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be > 0"));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 2.0) {
            return Err(Error::config("mfapc.eta", "step factor must lie in (0, 2]"));
        }
        if !self.rho.is_finite() {
            return Err(Error::config("mfapc.rho", "must be finite"));
        }
        if !(self.phi0.is_finite() && self.phi0.abs() >= self.epsilon) {
            return Err(Error::config("mfapc.phi0", "initial estimate must satisfy |φ̂₁| ≥ ε"));
        }
        if !(2..=7).contains(&self.n_m) {
            return Err(Error::config(
                "mfapc.n_m",
                format!("forecaster order {} outside the range [2, 7]", self.n_m),
            ));
        }
        if self.theta0.len() != self.n_m {
            return Err(Error::config(
                "mfapc.theta0",
                format!("has {} entries but n_m = {}", self.theta0.len(), self.n_m),
            ));
        }
        if let Some(m) = self.m_bound {
            if !(m > 0.0) {
                return Err(Error::config("mfapc.m_bound", "must be > 0"));
            }
        }
        if self.reset_bound() <= theta_norm(&self.theta0) {
            return Err(Error::config("mfapc.m_bound", "must exceed ‖θ₀‖"));
        }
        Ok(())
    }

    pub fn reset_bound(&self) -> f64 {
        self.m_bound.unwrap_or_else(|| 10.0 * theta_norm(&self.theta0) + 1.0)
    }

    pub fn horizon(&self, dt: f64) -> Result<usize> {
        let n = seconds_to_samples(self.n_s, dt, "mfapc.n_s")?;
        if n == 0 {
            return Err(Error::config("mfapc.n_s", "must span at least one sample"));
        }
        Ok(n)
    }
}

fn theta_norm(t: &[f64]) -> f64 {
    t.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub struct Mfapc {
    config: MfapcConfig,
    n: usize,
    estimator: PpdEstimator,
    forecaster: PpdForecaster,
    /// Estimates, newest first.
    history: VecDeque<f64>,
    guard_count: usize,
}

impl Mfapc {
    pub fn new(config: MfapcConfig, dt: f64) -> Result<Self> {
        config.validate()?;
        let n = config.horizon(dt)?;
        let estimator = PpdEstimator::new(config.phi0, config.mu, config.eta, config.epsilon);
        let forecaster = PpdForecaster::new(config.theta0.clone(), config.delta, config.reset_bound());
        let history = std::iter::repeat_n(config.phi0, config.n_m).collect();
        Ok(Self {
            config,
            n,
            estimator,
            forecaster,
            history,
            guard_count: 0,
        })
    }

    pub fn estimator(&self) -> &PpdEstimator {
        &self.estimator
    }

    pub fn forecaster(&self) -> &PpdForecaster {
        &self.forecaster
    }

    /// Number of steps on which the sign/magnitude reset fired.
    pub fn guard_count(&self) -> usize {
        self.guard_count
    }

    /// PPD values over the horizon: the current estimate then the forecasts.
    pub fn horizon_ppds(&self) -> Vec<f64> {
        let hist: Vec<f64> = self.history.iter().copied().collect();
        let mut phis = vec![hist[0]];
        phis.extend(
            self.forecaster
                .forecast(&hist, self.n - 1, self.config.phi0, self.config.epsilon),
        );
        phis
    }
}

impl Controller for Mfapc {
    fn name(&self) -> &str {
        "MFAPC-CFDL"
    }

    fn horizon(&self) -> usize {
        self.n
    }

    fn diagnostic_columns(&self) -> &'static [&'static str] {
        DIAGNOSTIC_COLUMNS
    }

    fn step(&mut self, y_now: &[f64], reference: &[Vec<f64>]) -> Result<StepOutput> {
        if y_now.len() != 1 || reference.len() < self.n || reference.iter().take(self.n).any(|r| r.len() != 1) {
            return Err(Error::Dimension(format!(
                "MFAPC is single-input single-output and needs {} reference samples",
                self.n
            )));
        }
        let y = y_now[0];
        let phi = self.estimator.estimate(y);
        let guard = self.estimator.step_direction_guard();
        if guard {
            self.guard_count += 1;
        }
        let h: Vec<f64> = self.history.iter().copied().collect();
        self.forecaster.update(&h, phi);
        self.history.push_front(phi);
        self.history.truncate(self.config.n_m);

        let phis = self.horizon_ppds();
        let y_star: Vec<f64> = reference.iter().take(self.n).map(|r| r[0]).collect();
        let du = control_increments(&phis, self.config.lambda, &y_star, y)?;
        let delta_u = self.config.rho * du[0];
        let u = self.estimator.prev_u() + delta_u;
        Ok(StepOutput {
            u: vec![u],
            diagnostics: vec![
                Diag::Num(phi),
                Diag::Flag(guard),
                Diag::Num(self.forecaster.theta().norm()),
                Diag::Num(delta_u),
                Diag::Time,
            ],
        })
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        if obs.u_applied.len() != 1 {
            return Err(Error::Dimension("MFAPC expects a scalar input".into()));
        }
        self.estimator.record_input(obs.u_applied[0]);
        Ok(())
    }
}
