use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A uniformly sampled multichannel time series.
///
/// Samples are stored sample-major in one flat buffer, so sample `k` occupies
/// `data[k * channels..(k + 1) * channels]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    channels: usize,
    dt: f64,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(channels: usize, dt: f64) -> Result<Self> {
        Self::from_flat(channels, dt, Vec::new())
    }

    pub fn from_flat(channels: usize, dt: f64, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Dimension("trajectory needs at least one channel".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Dimension(format!("sampling period must be positive, got {dt}")));
        }
        if !data.len().is_multiple_of(channels) {
            return Err(Error::Dimension(format!(
                "flat buffer of length {} is not a multiple of {channels} channels",
                data.len()
            )));
        }
        Ok(Self { channels, dt, data })
    }

    pub fn from_samples(channels: usize, dt: f64, samples: &[Vec<f64>]) -> Result<Self> {
        let mut t = Self::new(channels, dt)?;
        for s in samples {
            t.push(s)?;
        }
        Ok(t)
    }

    /// Single-channel trajectory from a plain slice.
    pub fn from_scalar(values: &[f64], dt: f64) -> Result<Self> {
        Self::from_flat(1, dt, values.to_vec())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.channels..(k + 1) * self.channels]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.channels)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Values of one channel across time.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.samples().map(|s| s[c]).collect()
    }

    pub fn push(&mut self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.channels {
            return Err(Error::Dimension(format!(
                "sample has {} entries, trajectory has {} channels",
                sample.len(),
                self.channels
            )));
        }
        self.data.extend_from_slice(sample);
        Ok(())
    }

    /// Drops the oldest `n` samples.
    pub fn drop_front(&mut self, n: usize) {
        let n = n.min(self.len());
        self.data.drain(..n * self.channels);
    }

    /// Samples `start..end` as a new trajectory.
    pub fn slice(&self, start: usize, end: usize) -> Trajectory {
        Trajectory {
            channels: self.channels,
            dt: self.dt,
            data: self.data[start * self.channels..end * self.channels].to_vec(),
        }
    }

    /// The last `n` samples (or all of them if shorter).
    pub fn tail(&self, n: usize) -> Trajectory {
        let len = self.len();
        self.slice(len.saturating_sub(n), len)
    }

    /// CSV with header `t,ch0,ch1,...`; values carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in 0..self.channels {
            let _ = write!(out, ",ch{c}");
        }
        out.push('\n');
        for (k, s) in self.samples().enumerate() {
            let _ = write!(out, "{:.16e}", k as f64 * self.dt);
            for v in s {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV produced by [`Trajectory::to_csv`]. The sampling period is
    /// recovered from the time column (first two rows), or taken from
    /// `fallback_dt` for trajectories with fewer than two samples.
    pub fn from_csv(text: &str, fallback_dt: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(Error::Parse(format!("unexpected CSV header `{header}`")));
        }
        let channels = cols.len() - 1;
        let mut times = Vec::new();
        let mut data = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != channels + 1 {
                return Err(Error::Parse(format!("row {i} has {} fields", fields.len())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {i}: `{s}`: {e}")))
            };
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                data.push(parse(f)?);
            }
        }
        let dt = if times.len() >= 2 { times[1] - times[0] } else { fallback_dt };
        Self::from_flat(channels, dt, data)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }
}
