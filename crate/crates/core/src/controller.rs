//! The interface shared by all controllers, plus configuration pieces used by
//! more than one of them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{persistent_excitation_order, Trajectory};

/// One measurement delivered after the plant has advanced.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    /// Input the plant actually received (after clamping).
    pub u_applied: &'a [f64],
    /// Output measured after the input was held for one period.
    pub y: &'a [f64],
    /// Full plant state at the same instant.
    pub x: &'a [f64],
}

/// Value of one diagnostics column.
#[derive(Debug, Clone, PartialEq)]
pub enum Diag {
    Num(f64),
    Flag(bool),
    Text(&'static str),
    /// Placeholder for the wall time of the step; the harness fills it in.
    Time,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub u: Vec<f64>,
    /// One entry per name in [`Controller::diagnostic_columns`] after `step`.
    pub diagnostics: Vec<Diag>,
}

pub trait Controller: Send {
    fn name(&self) -> &str;

    /// Prediction horizon in samples; the harness supplies this many
    /// reference samples to every step.
    fn horizon(&self) -> usize;

    /// Diagnostics column names, starting with `step`.
    fn diagnostic_columns(&self) -> &'static [&'static str];

    /// Computes the input for the current sample. `reference` holds
    /// `r_{k+1} .. r_{k+N}`.
    fn step(&mut self, y_now: &[f64], reference: &[Vec<f64>]) -> Result<StepOutput>;

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()>;
}

/// A cost weight: a scalar (scaled identity) or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Weight {
    pub fn to_matrix(&self, dim: usize, key: &str) -> Result<DMatrix<f64>> {
        let m = match self {
            Weight::Scalar(s) => DMatrix::identity(dim, dim) * *s,
            Weight::Matrix(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::config(key, format!("expected a {dim}x{dim} matrix")));
                }
                DMatrix::from_fn(dim, dim, |i, j| rows[i][j])
            }
        };
        if (&m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
            return Err(Error::config(key, "weight matrix must be symmetric"));
        }
        if !m.iter().all(|v| v.is_finite()) || (dim > 0 && m.clone().symmetric_eigenvalues().min() < 0.0) {
            return Err(Error::config(key, "weights must be >= 0 (positive semidefinite)"));
        }
        Ok(m)
    }
}

/// How an insufficiently exciting offline dataset is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeCheck {
    #[default]
    Strict,
    WarnOnly,
    Off,
}

/// Checks the excitation order of `u` against `required`.
pub(crate) fn check_excitation(u: &Trajectory, required: usize, mode: PeCheck, who: &str) -> Result<usize> {
    if mode == PeCheck::Off {
        return Ok(0);
    }
    let achieved = persistent_excitation_order(u);
    if achieved < required {
        if mode == PeCheck::Strict {
            return Err(Error::PersistentExcitation { achieved, required });
        }
        log::warn!("{who}: offline input is PE of order {achieved}, {required} required");
    }
    Ok(achieved)
}

/// Converts a duration in seconds to a whole number of samples.
pub fn seconds_to_samples(seconds: f64, dt: f64, key: &str) -> Result<usize> {
    if !(seconds.is_finite() && seconds >= 0.0) {
        return Err(Error::config(key, "must be a finite non-negative duration"));
    }
    let samples = (seconds / dt).round() as usize;
    if ((samples as f64) * dt - seconds).abs() > 1e-9 * (1.0 + seconds) {
        log::info!("{key}: {seconds} s rounded to {samples} samples of {dt} s");
    }
    Ok(samples)
}

pub(crate) fn check_box(bounds: Option<[f64; 2]>, key: &str) -> Result<()> {
    if let Some([lo, hi]) = bounds {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::config(key, format!("empty interval [{lo}, {hi}]")));
        }
    }
    Ok(())
}

pub(crate) fn box_or_free(bounds: Option<[f64; 2]>) -> (f64, f64) {
    bounds.map_or((f64::NEG_INFINITY, f64::INFINITY), |[lo, hi]| (lo, hi))
}

/// Sliding window of the most recent `len` samples.
#[derive(Debug, Clone)]
pub(crate) struct Window {
    len: usize,
    data: Vec<f64>,
    channels: usize,
}

impl Window {
    pub(crate) fn from_tail(t: &Trajectory, len: usize) -> Self {
        Self {
            len,
            data: t.tail(len).as_flat().to_vec(),
            channels: t.channels(),
        }
    }

    pub(crate) fn push(&mut self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.channels {
            return Err(Error::Dimension(format!(
                "sample has {} entries, window has {} channels",
                sample.len(),
                self.channels
            )));
        }
        self.data.extend_from_slice(sample);
        let excess = self.data.len().saturating_sub(self.len * self.channels);
        self.data.drain(..excess);
        Ok(())
    }

    pub(crate) fn is_full(&self) -> bool {
        self.data.len() == self.len * self.channels
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.data
    }
}
