use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{compute_metrics, Metrics, Reference};
use crate::controller::{Controller, Diag, Observation};
use crate::error::{Error, Result};
use crate::plants::{sample_step, Plant, PlantState, Scenario};
use crate::signals::Trajectory;

/// Independent seed for a named random stream derived from the run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const NOISE_STREAM: u64 = 1;
pub const LIFTER_STREAM: u64 = 2;

/// Seeds used by one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SeedRecord {
    pub seed: u64,
    pub offline: u64,
    pub noise: u64,
    pub lifter: u64,
}

impl SeedRecord {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            offline: seed,
            noise: derive_seed(seed, NOISE_STREAM),
            lifter: derive_seed(seed, LIFTER_STREAM),
        }
    }
}

/// Offline input/output/state data, paired so that sample `k` holds the
/// input `u_k` and the output and state reached after applying it.
#[derive(Debug, Clone)]
pub struct OfflineData {
    pub u: Trajectory,
    pub y: Trajectory,
    pub x: Trajectory,
    /// Plant state at the end of the experiment.
    pub final_state: Vec<f64>,
}

/// Drives the plant from `x0` with inputs drawn uniformly from
/// `[-amplitude, amplitude]` and held for one period each.
pub fn offline_excitation(
    plant: &dyn Plant,
    x0: &[f64],
    length_s: f64,
    dt: f64,
    substeps: usize,
    amplitude: f64,
    seed: u64,
) -> Result<OfflineData> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::config("offline.amplitude", "must be a finite non-negative number"));
    }
    if !(dt > 0.0) {
        return Err(Error::config("dt", "sampling period must be positive"));
    }
    if x0.len() != plant.state_dim() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, plant has {} states",
            x0.len(),
            plant.state_dim()
        )));
    }
    let len = (length_s / dt).round() as usize;
    let m = plant.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Trajectory::new(m, dt)?;
    let mut y = Trajectory::new(plant.output_dim(), dt)?;
    let mut x = Trajectory::new(plant.state_dim(), dt)?;
    let mut state = PlantState::new(x0.to_vec());
    let nominal = Scenario::default();
    for _ in 0..len {
        let uk: Vec<f64> = (0..m).map(|_| amplitude * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let (next, yk) = sample_step(plant, &state, &uk, dt, substeps, &nominal, None)?;
        u.push(&uk)?;
        y.push(&yk)?;
        x.push(&next.x)?;
        state = next;
    }
    Ok(OfflineData {
        u,
        y,
        x,
        final_state: state.x,
    })
}

/// Everything the loop needs besides the controller.
pub struct LoopSpec<'a> {
    pub plant: &'a dyn Plant,
    pub x0: Vec<f64>,
    pub dt: f64,
    pub substeps: usize,
    pub duration_s: f64,
    pub reference: &'a Reference,
    pub scenario: &'a Scenario,
    /// Actuator box; requested inputs are clamped into it.
    pub u_box: Option<[f64; 2]>,
    pub seeds: SeedRecord,
    /// Multiplier converting output errors to the reported unit.
    pub error_scale: f64,
}

/// Diagnostics rows with the timing placeholder filled in.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Diag>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub controller: String,
    pub dt: f64,
    pub r: Trajectory,
    pub u_requested: Trajectory,
    pub u: Trajectory,
    pub y: Trajectory,
    /// Plant state at each sample (aligned with `y`).
    pub x: Trajectory,
    pub solve_time: Vec<f64>,
    pub clamped: Vec<bool>,
    /// Noise added to each logged measurement.
    pub measurement_noise: Trajectory,
    pub diagnostics: DiagnosticsTable,
    pub metrics: Metrics,
    pub seeds: SeedRecord,
    /// Set when the run stopped early; the series hold the completed steps.
    pub abort: Option<String>,
}

impl RunResult {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.r
            .as_flat()
            .iter()
            .zip(self.y.as_flat())
            .map(|(r, y)| r - y)
            .collect()
    }

    pub fn clamp_count(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }
}

fn noisy(mut y: Vec<f64>, std: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut added = vec![0.0; y.len()];
    if std > 0.0 {
        for (v, n) in y.iter_mut().zip(&mut added) {
            *n = std * rng.sample::<f64, _>(StandardNormal);
            *v += *n;
        }
    }
    (y, added)
}

/// Runs the loop `read y → step → clamp → advance plant → observe` for
/// `duration_s / dt` samples, timing only the controller step.
pub fn run_closed_loop(spec: &LoopSpec<'_>, controller: &mut dyn Controller) -> Result<RunResult> {
    spec.scenario.validate(spec.duration_s)?;
    spec.reference.validate()?;
    let plant = spec.plant;
    let dt = spec.dt;
    if !(dt > 0.0) {
        return Err(Error::config("dt", "sampling period must be positive"));
    }
    if spec.x0.len() != plant.state_dim() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, plant has {} states",
            spec.x0.len(),
            plant.state_dim()
        )));
    }
    let steps = (spec.duration_s / dt).round() as usize;
    let (m, p) = (plant.input_dim(), plant.output_dim());
    let horizon = controller.horizon();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seeds.noise);
    let mut result = RunResult {
        controller: controller.name().to_string(),
        dt,
        r: Trajectory::new(p, dt)?,
        u_requested: Trajectory::new(m, dt)?,
        u: Trajectory::new(m, dt)?,
        y: Trajectory::new(p, dt)?,
        x: Trajectory::new(plant.state_dim(), dt)?,
        solve_time: Vec::with_capacity(steps),
        clamped: Vec::with_capacity(steps),
        measurement_noise: Trajectory::new(p, dt)?,
        diagnostics: DiagnosticsTable {
            columns: controller.diagnostic_columns().to_vec(),
            rows: Vec::with_capacity(steps),
        },
        metrics: Metrics::default(),
        seeds: spec.seeds,
        abort: None,
    };

    let mut state = PlantState::new(spec.x0.clone());
    let (mut y_now, mut noise_now) = noisy(plant.output(&state.x), spec.scenario.noise_std, &mut noise_rng);
    for k in 0..steps {
        let reference = spec.reference.window(k + 1, horizon, dt);
        let r_now = spec.reference.value_at(k as f64 * dt);
        let started = Instant::now();
        let out = controller.step(&y_now, &reference);
        let elapsed = started.elapsed().as_secs_f64();
        let out = match out {
            Ok(o) => o,
            Err(e) => {
                result.abort = Some(format!("controller failed at step {k} (t = {:.3} s): {e}", k as f64 * dt));
                break;
            }
        };
        if out.u.len() != m || out.u.iter().any(|v| !v.is_finite()) {
            result.abort = Some(format!("controller returned an invalid input {:?} at step {k}", out.u));
            break;
        }
        let applied: Vec<f64> = match spec.u_box {
            Some([lo, hi]) => out.u.iter().map(|v| v.clamp(lo, hi)).collect(),
            None => out.u.clone(),
        };
        let clamped = applied != out.u;
        if clamped {
            log::debug!("step {k}: input {:?} clamped to {:?}", out.u, applied);
        }
        result.r.push(&vec![r_now; p])?;
        result.u_requested.push(&out.u)?;
        result.u.push(&applied)?;
        result.y.push(&y_now)?;
        result.x.push(&state.x)?;
        result.solve_time.push(elapsed);
        result.clamped.push(clamped);
        result.measurement_noise.push(&noise_now)?;
        let mut row = vec![Diag::Num(k as f64)];
        row.extend(out.diagnostics.into_iter().map(|d| match d {
            Diag::Time => Diag::Num(elapsed),
            other => other,
        }));
        result.diagnostics.rows.push(row);

        let (next, y_clean) = match sample_step(plant, &state, &applied, dt, spec.substeps, spec.scenario, None) {
            Ok(v) => v,
            Err(e) => {
                result.abort = Some(format!("plant failed at step {k}: {e}"));
                break;
            }
        };
        let (y_next, n) = noisy(y_clean, spec.scenario.noise_std, &mut noise_rng);
        if let Err(e) = controller.observe(&Observation {
            u_applied: &applied,
            y: &y_next,
            x: &next.x,
        }) {
            result.abort = Some(format!("controller rejected the observation at step {k}: {e}"));
            break;
        }
        state = next;
        y_now = y_next;
        noise_now = n;
    }

    if !result.is_empty() {
        let inputs: Vec<f64> = result
            .u
            .samples()
            .map(|s| s.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .collect();
        result.metrics = compute_metrics(&result.errors(), &inputs, &result.solve_time, dt, spec.error_scale)?;
    }
    if let Some(reason) = &result.abort {
        log::error!("{}: {reason}", result.controller);
    }
    Ok(result)
}
