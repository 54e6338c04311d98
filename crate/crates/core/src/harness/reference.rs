use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Deg,
    /// Radians, or the plant's native output unit for non-angular plants.
    Rad,
}

impl Unit {
    fn to_native(self, v: f64) -> f64 {
        match self {
            Unit::Deg => v.to_radians(),
            Unit::Rad => v,
        }
    }
}

/// Reference trajectory for a single output channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    Constant {
        value: f64,
        #[serde(default)]
        unit: Unit,
    },
    Step {
        #[serde(default)]
        initial: f64,
        #[serde(rename = "final")]
        final_value: f64,
        #[serde(default)]
        time_s: f64,
        #[serde(default)]
        unit: Unit,
    },
    /// Holds `values[i]` from `times_s[i]` until the next switch time.
    Piecewise {
        times_s: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        unit: Unit,
    },
}

impl Default for Reference {
    /// 0° to 20° at t = 0.
    fn default() -> Self {
        Reference::Step {
            initial: 0.0,
            final_value: 20.0,
            time_s: 0.0,
            unit: Unit::Deg,
        }
    }
}

impl Reference {
    pub fn validate(&self) -> Result<()> {
        match self {
            Reference::Constant { value, .. } if !value.is_finite() => {
                Err(Error::config("reference.value", "must be finite"))
            }
            Reference::Step {
                initial,
                final_value,
                time_s,
                ..
            } if !(initial.is_finite() && final_value.is_finite() && *time_s >= 0.0) => {
                Err(Error::config("reference", "step values must be finite and the switch time non-negative"))
            }
            Reference::Piecewise { times_s, values, .. } => {
                if times_s.is_empty() || times_s.len() != values.len() {
                    return Err(Error::config("reference.times_s", "needs one value per switch time"));
                }
                if times_s.windows(2).any(|w| w[1] <= w[0]) || times_s[0] < 0.0 {
                    return Err(Error::config("reference.times_s", "switch times must be increasing and non-negative"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Reference value at time `t`, in the plant's native unit.
    pub fn value_at(&self, t: f64) -> f64 {
        // switch times are compared with a small margin so that a switch
        // specified on a sample instant takes effect on that sample
        let reached = |ts: f64| t + 1e-9 >= ts;
        match *self {
            Reference::Constant { value, unit } => unit.to_native(value),
            Reference::Step {
                initial,
                final_value,
                time_s,
                unit,
            } => unit.to_native(if reached(time_s) { final_value } else { initial }),
            Reference::Piecewise {
                ref times_s,
                ref values,
                unit,
            } => {
                let idx = times_s.iter().rposition(|&ts| reached(ts)).unwrap_or(0);
                unit.to_native(values[idx])
            }
        }
    }

    /// Samples `r_{start} .. r_{start+len-1}`.
    pub fn window(&self, start: usize, len: usize, dt: f64) -> Vec<Vec<f64>> {
        (start..start + len).map(|k| vec![self.value_at(k as f64 * dt)]).collect()
    }
}
