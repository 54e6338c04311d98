use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Plant, PlantState};
use crate::error::{Error, Result};

/// Linear ramp of the input gain: `1 + rate_per_s · (t − start_s)` for
/// `t ≥ start_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainDrift {
    pub start_s: f64,
    pub rate_per_s: f64,
}

/// Plant-side perturbations applied by [`sample_step`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// From this time on the input enters with its sign flipped.
    pub direction_flip_time_s: Option<f64>,
    pub gain_drift: Option<GainDrift>,
    /// Standard deviation of additive Gaussian output noise.
    pub noise_std: f64,
}

impl Scenario {
    pub fn validate(&self, duration_s: f64) -> Result<()> {
        if let Some(t) = self.direction_flip_time_s {
            if !(0.0..=duration_s).contains(&t) {
                return Err(Error::config("scenario.direction_flip_time_s", format!("{t} lies outside the run [0, {duration_s}]")));
            }
        }
        if let Some(d) = self.gain_drift {
            if !(0.0..=duration_s).contains(&d.start_s) {
                return Err(Error::config("scenario.gain_drift.start_s", format!("{} lies outside the run", d.start_s)));
            }
            if !d.rate_per_s.is_finite() {
                return Err(Error::config("scenario.gain_drift.rate_per_s", "must be finite"));
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config("scenario.noise_std", "must be a finite non-negative number"));
        }
        Ok(())
    }

    /// Multiplier applied to the commanded input at time `t`.
    pub fn input_gain(&self, t: f64) -> f64 {
        let mut g = 1.0;
        if let Some(d) = self.gain_drift {
            if t >= d.start_s {
                g += d.rate_per_s * (t - d.start_s);
            }
        }
        // a small margin keeps the flip at the sample it was specified on
        if self.direction_flip_time_s.is_some_and(|tf| t + 1e-9 >= tf) {
            g = -g;
        }
        g
    }
}

/// Advances one sampling period under held input and returns the new state
/// and the (possibly noisy) measured output.
pub fn sample_step(
    plant: &dyn Plant,
    state: &PlantState,
    u: &[f64],
    dt: f64,
    substeps: usize,
    scenario: &Scenario,
    noise: Option<&mut ChaCha8Rng>,
) -> Result<(PlantState, Vec<f64>)> {
    if substeps == 0 {
        return Err(Error::config("plant.substeps", "must be at least 1"));
    }
    let gain = scenario.input_gain(state.t);
    let effective: Vec<f64> = u.iter().map(|v| gain * v).collect();
    let next = plant.advance(state, &effective, dt, substeps)?;
    let mut y = plant.output(&next.x);
    if scenario.noise_std > 0.0 {
        if let Some(rng) = noise {
            for v in &mut y {
                *v += scenario.noise_std * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    Ok((next, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants::{pendulum_deriv, Pendulum, PendulumParams};
    use rand::SeedableRng;

    #[test]
    fn flip_mirrors_torque_contribution() {
        let p = Pendulum::new(PendulumParams::default()).unwrap();
        let sc = Scenario {
            direction_flip_time_s: Some(1.0),
            ..Scenario::default()
        };
        let before = PlantState { x: vec![0.0, 0.0], t: 0.5 };
        let after = PlantState { x: vec![0.0, 0.0], t: 1.5 };
        let (b, _) = sample_step(&p, &before, &[1.0], 0.1, 10, &sc, None).unwrap();
        let (a, _) = sample_step(&p, &after, &[1.0], 0.1, 10, &sc, None).unwrap();
        assert!(b.x[1] > 0.0);
        assert_eq!(a.x[1], -b.x[1]);
        assert_eq!(a.x[0], -b.x[0]);
    }

    #[test]
    fn flip_changes_only_the_input_sign() {
        let params = PendulumParams::default();
        let sc = Scenario {
            direction_flip_time_s: Some(0.0),
            ..Scenario::default()
        };
        let x = [0.3, -0.7];
        let g = sc.input_gain(0.0);
        let flipped = pendulum_deriv(&params, &x, g * 2.0);
        let free = pendulum_deriv(&params, &x, 0.0);
        let nominal = pendulum_deriv(&params, &x, 2.0);
        assert_eq!(flipped[0], nominal[0]);
        assert!(((flipped[1] - free[1]) + (nominal[1] - free[1])).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_matches_disabled() {
        let p = Pendulum::new(PendulumParams::default()).unwrap();
        let s = PlantState::new(vec![0.1, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let quiet = Scenario::default();
        let (_, y0) = sample_step(&p, &s, &[0.5], 0.1, 10, &quiet, None).unwrap();
        let (_, y1) = sample_step(&p, &s, &[0.5], 0.1, 10, &quiet, Some(&mut rng)).unwrap();
        assert_eq!(y0, y1);
    }

    #[test]
    fn noise_is_seeded() {
        let p = Pendulum::new(PendulumParams::default()).unwrap();
        let s = PlantState::new(vec![0.1, 0.0]);
        let sc = Scenario {
            noise_std: 0.01,
            ..Scenario::default()
        };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_step(&p, &s, &[0.5], 0.1, 10, &sc, Some(&mut rng)).unwrap().1
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn drift_ramps_gain() {
        let sc = Scenario {
            gain_drift: Some(GainDrift { start_s: 2.0, rate_per_s: -0.1 }),
            ..Scenario::default()
        };
        assert_eq!(sc.input_gain(1.0), 1.0);
        assert!((sc.input_gain(4.0) - 0.8).abs() < 1e-15);
        assert!(sc.validate(10.0).is_ok());
        assert!(Scenario { direction_flip_time_s: Some(11.0), ..sc }.validate(10.0).is_err());
    }
}
