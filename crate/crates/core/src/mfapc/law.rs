use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower-triangular prediction matrix: column `j` holds `phis[j]` from row
/// `j` down.
pub fn prediction_matrix(phis: &[f64]) -> DMatrix<f64> {
    let n = phis.len();
    DMatrix::from_fn(n, n, |i, j| if j <= i { phis[j] } else { 0.0 })
}

/// Input increments `ΔU = (AᵀA + λI)⁻¹ Aᵀ (Y* − y_k)`.
pub fn control_increments(phis: &[f64], lambda: f64, y_star: &[f64], y_k: f64) -> Result<DVector<f64>> {
    let n = phis.len();
    if y_star.len() != n {
        return Err(Error::Dimension(format!(
            "reference window has {} samples, horizon is {n}",
            y_star.len()
        )));
    }
    let a = prediction_matrix(phis);
    let err = DVector::from_iterator(n, y_star.iter().map(|r| r - y_k));
    let lhs = a.transpose() * &a + DMatrix::identity(n, n) * lambda;
    let rhs = a.transpose() * err;
    lhs.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Degenerate("control-law matrix is not positive definite".into()))
}
