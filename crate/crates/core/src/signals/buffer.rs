use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BufferMode {
    #[default]
    Frozen,
    Rolling,
}

/// Paired input/output data with a fixed capacity.
///
/// An optional auxiliary stream (e.g. measured plant states for lifting)
/// travels alongside and is evicted in lockstep.
#[derive(Debug, Clone)]
pub struct DataBuffer {
    capacity: usize,
    mode: BufferMode,
    u: Trajectory,
    y: Trajectory,
    aux: Option<Trajectory>,
}

impl DataBuffer {
    /// Wraps offline data; the capacity equals its length.
    pub fn from_data(u: Trajectory, y: Trajectory, mode: BufferMode) -> Result<Self> {
        let capacity = u.len();
        Self::with_capacity(u, y, None, capacity, mode)
    }

    pub fn with_capacity(
        u: Trajectory,
        y: Trajectory,
        aux: Option<Trajectory>,
        capacity: usize,
        mode: BufferMode,
    ) -> Result<Self> {
        if u.len() != y.len() || aux.as_ref().is_some_and(|a| a.len() != u.len()) {
            return Err(Error::Dimension(format!(
                "buffer streams differ in length: u {}, y {}, aux {:?}",
                u.len(),
                y.len(),
                aux.as_ref().map(Trajectory::len)
            )));
        }
        if capacity == 0 {
            return Err(Error::Dimension("buffer capacity must be positive".into()));
        }
        let mut buf = Self {
            capacity,
            mode,
            u,
            y,
            aux,
        };
        buf.evict_overflow();
        Ok(buf)
    }

    pub fn with_aux(mut self, aux: Trajectory) -> Result<Self> {
        if aux.len() != self.u.len() {
            return Err(Error::Dimension(format!(
                "aux stream length {} differs from buffer length {}",
                aux.len(),
                self.u.len()
            )));
        }
        self.aux = Some(aux);
        Ok(self)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> BufferMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &Trajectory {
        &self.u
    }

    pub fn y(&self) -> &Trajectory {
        &self.y
    }

    pub fn aux(&self) -> Option<&Trajectory> {
        self.aux.as_ref()
    }

    pub fn append(&mut self, u: &[f64], y: &[f64]) -> Result<()> {
        if self.aux.is_some() {
            return Err(Error::Dimension("buffer carries an aux stream; use append_with_aux".into()));
        }
        self.append_inner(u, y, None)
    }

    pub fn append_with_aux(&mut self, u: &[f64], y: &[f64], aux: &[f64]) -> Result<()> {
        if self.aux.is_none() {
            return Err(Error::Dimension("buffer has no aux stream".into()));
        }
        self.append_inner(u, y, Some(aux))
    }

    fn append_inner(&mut self, u: &[f64], y: &[f64], aux: Option<&[f64]>) -> Result<()> {
        if self.mode == BufferMode::Frozen {
            return Err(Error::FrozenBuffer);
        }
        if u.len() != self.u.channels() || y.len() != self.y.channels() {
            return Err(Error::Dimension(format!(
                "sample sizes ({}, {}) do not match buffer channels ({}, {})",
                u.len(),
                y.len(),
                self.u.channels(),
                self.y.channels()
            )));
        }
        if let (Some(a), Some(stream)) = (aux, self.aux.as_ref()) {
            if a.len() != stream.channels() {
                return Err(Error::Dimension(format!(
                    "aux sample has {} entries, stream has {} channels",
                    a.len(),
                    stream.channels()
                )));
            }
        }
        self.u.push(u)?;
        self.y.push(y)?;
        if let (Some(a), Some(stream)) = (aux, self.aux.as_mut()) {
            stream.push(a)?;
        }
        self.evict_overflow();
        Ok(())
    }

    fn evict_overflow(&mut self) {
        let excess = self.u.len().saturating_sub(self.capacity);
        if excess > 0 {
            self.u.drop_front(excess);
            self.y.drop_front(excess);
            if let Some(a) = self.aux.as_mut() {
                a.drop_front(excess);
            }
        }
    }
}
