use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four summary numbers of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    /// `Σ_k |e_k|` in degrees (per-sample sum).
    pub abs_integral_error_deg: f64,
    /// The same sum weighted by the sampling period.
    pub aie_dt: f64,
    /// Smallest `|e_k|` in degrees over the final quarter of the run.
    pub min_abs_error_deg: f64,
    pub max_abs_input: f64,
    pub mean_opt_time_s: f64,
}

/// Human-readable labels, in table order.
pub const METRIC_LABELS: [(&str, &str, &str); 4] = [
    ("abs_integral_error_deg", "Absolute integral error", "deg"),
    ("min_abs_error_deg", "Minimum absolute error", "deg"),
    ("max_abs_input", "Maximum absolute input", "N·m"),
    ("mean_opt_time_s", "Optimization time", "s"),
];

impl Metrics {
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "abs_integral_error_deg" => self.abs_integral_error_deg,
            "aie_dt" => self.aie_dt,
            "min_abs_error_deg" => self.min_abs_error_deg,
            "max_abs_input" => self.max_abs_input,
            "mean_opt_time_s" => self.mean_opt_time_s,
            _ => return None,
        })
    }
}

/// First index of the final quarter of a run of `len` samples.
pub fn steady_state_start(len: usize) -> usize {
    3 * len / 4
}

/// Computes the metrics. `errors` are `r_k − y_k` in native units and are
/// multiplied by `error_scale` (e.g. 180/π for radians) before use; `inputs`
/// holds one applied input per step (the largest channel magnitude for
/// multi-input plants). Sums run strictly in index order.
pub fn compute_metrics(
    errors: &[f64],
    inputs: &[f64],
    solve_times: &[f64],
    dt: f64,
    error_scale: f64,
) -> Result<Metrics> {
    let n = errors.len();
    if n == 0 {
        return Err(Error::Dimension("metrics need at least one sample".into()));
    }
    if inputs.len() != n || solve_times.len() != n {
        return Err(Error::Dimension(format!(
            "series lengths differ: errors {n}, inputs {}, solve times {}",
            inputs.len(),
            solve_times.len()
        )));
    }
    let mut aie = 0.0;
    for e in errors {
        aie += e.abs() * error_scale;
    }
    let mut min_err = f64::INFINITY;
    for e in &errors[steady_state_start(n)..] {
        min_err = min_err.min(e.abs() * error_scale);
    }
    let mut max_u = 0.0f64;
    for u in inputs {
        max_u = max_u.max(u.abs());
    }
    let mut total_time = 0.0;
    for t in solve_times {
        total_time += t;
    }
    Ok(Metrics {
        abs_integral_error_deg: aie,
        aie_dt: aie * dt,
        min_abs_error_deg: min_err,
        max_abs_input: max_u,
        mean_opt_time_s: total_time / n as f64,
    })
}
