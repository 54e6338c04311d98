use nalgebra::{DMatrix, DVector};

use super::{build_hankel, Trajectory};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Numerical rank with a relative singular-value threshold.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax <= 0.0 || !smax.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Largest `L` for which `H_L(w)` has full row rank, using the default
/// tolerance. Only depths with `T - L >= L - 1` are searched.
pub fn persistent_excitation_order(w: &Trajectory) -> usize {
    persistent_excitation_order_with_tol(w, DEFAULT_RANK_TOL)
}

pub fn persistent_excitation_order_with_tol(w: &Trajectory, rel_tol: f64) -> usize {
    let t = w.len();
    let max_depth = t.div_ceil(2);
    let mut order = 0;
    // Full row rank at depth L implies full row rank at every smaller depth,
    // so the scan stops at the first failure.
    for depth in 1..=max_depth {
        let h = match build_hankel(w, depth) {
            Ok(h) => h,
            Err(_) => break,
        };
        let rows = h.matrix().nrows();
        if rows > h.cols() || numerical_rank(h.matrix(), rel_tol) < rows {
            break;
        }
        order = depth;
    }
    order
}

/// Least-squares residual `min_g || [H_L(u); H_L(y)] g - [u_probe; y_probe] ||`.
///
/// A residual near zero certifies the probe as a trajectory explained by the
/// data. The probe is stacked sample-major per signal, matching the Hankel rows.
pub fn behavioral_residual(
    data_u: &Trajectory,
    data_y: &Trajectory,
    probe_u: &Trajectory,
    probe_y: &Trajectory,
    depth: usize,
) -> Result<f64> {
    if data_u.channels() != probe_u.channels() || data_y.channels() != probe_y.channels() {
        return Err(Error::Dimension(format!(
            "data channels ({}, {}) do not match probe channels ({}, {})",
            data_u.channels(),
            data_y.channels(),
            probe_u.channels(),
            probe_y.channels()
        )));
    }
    if probe_u.len() != depth || probe_y.len() != depth {
        return Err(Error::Dimension(format!(
            "probe lengths ({}, {}) must equal the depth {depth}",
            probe_u.len(),
            probe_y.len()
        )));
    }
    if data_u.len() != data_y.len() {
        return Err(Error::Dimension(format!(
            "data lengths differ: {} vs {}",
            data_u.len(),
            data_y.len()
        )));
    }
    let hu = build_hankel(data_u, depth)?;
    let hy = build_hankel(data_y, depth)?;
    let stacked = stack_rows(&[hu.matrix(), hy.matrix()]);
    let mut probe = probe_u.as_flat().to_vec();
    probe.extend_from_slice(probe_y.as_flat());
    Ok(projection_residual(&stacked, &DVector::from_vec(probe)))
}

/// Distance from `b` to the column space of `m`, via the thin SVD.
pub fn projection_residual(m: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let mut proj = DVector::zeros(b.len());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > DEFAULT_RANK_TOL * smax {
            let uk = u.column(k);
            proj.axpy(uk.dot(b), &uk, 1.0);
        }
    }
    (b - proj).norm()
}

pub(crate) fn stack_rows(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.rows_mut(r, b.nrows()).copy_from(*b);
        r += b.nrows();
    }
    out
}
