use nalgebra::{DMatrix, DMatrixView};

use super::Trajectory;
use crate::error::{Error, Result};

/// Depth-`L` block-Hankel arrangement of a trajectory.
///
/// Block element `(i, j)` is sample `i + j`; within a block row the channels
/// are interleaved, so scalar row `i * channels + c` carries channel `c`.
/// An optional split partitions the block rows into a past window of `past`
/// rows followed by `future` rows.
#[derive(Debug, Clone)]
pub struct HankelView {
    depth: usize,
    channels: usize,
    matrix: DMatrix<f64>,
    split: Option<(usize, usize)>,
}

pub fn build_hankel(w: &Trajectory, depth: usize) -> Result<HankelView> {
    if depth == 0 {
        return Err(Error::Dimension("Hankel depth must be at least 1".into()));
    }
    let len = w.len();
    if len < depth {
        return Err(Error::TooShort { len, depth });
    }
    let ch = w.channels();
    let cols = len - depth + 1;
    let flat = w.as_flat();
    let matrix = DMatrix::from_fn(depth * ch, cols, |r, j| {
        let (i, c) = (r / ch, r % ch);
        flat[(i + j) * ch + c]
    });
    Ok(HankelView {
        depth,
        channels: ch,
        matrix,
        split: None,
    })
}

impl HankelView {
    /// Partitions the block rows into `past` rows then `future` rows.
    pub fn with_split(mut self, past: usize, future: usize) -> Result<Self> {
        if past + future != self.depth {
            return Err(Error::Dimension(format!(
                "split {past} + {future} does not match Hankel depth {}",
                self.depth
            )));
        }
        self.split = Some((past, future));
        Ok(self)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of block columns, `T - L + 1`.
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Value at block row `i`, block column `j`, channel `c`.
    pub fn at(&self, i: usize, j: usize, c: usize) -> f64 {
        self.matrix[(i * self.channels + c, j)]
    }

    pub fn past(&self) -> Option<DMatrixView<'_, f64>> {
        self.split
            .map(|(p, _)| self.matrix.rows(0, p * self.channels))
    }

    pub fn future(&self) -> Option<DMatrixView<'_, f64>> {
        self.split
            .map(|(p, f)| self.matrix.rows(p * self.channels, f * self.channels))
    }
}
