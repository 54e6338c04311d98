use nalgebra::{DMatrix, DVector};

use super::{QpProblem, QpSolution, QpStatus};
use crate::error::{Error, Result};

/// Direct solve of the KKT system `[[P, Aᵀ], [A, 0]] [x; ν] = [-q; b]` for
/// problems without finite bounds. Used as an independent oracle for
/// [`super::solve`].
pub fn kkt_solve(problem: &QpProblem) -> Result<QpSolution> {
    problem.validate()?;
    if problem.has_finite_bounds() {
        return Err(Error::Dimension("kkt_solve accepts only problems without finite bounds".into()));
    }
    let n = problem.num_vars();
    let m = problem.num_eq();
    let dim = n + m;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(&problem.p);
    kkt.view_mut((n, 0), (m, n)).copy_from(&problem.a_eq);
    kkt.view_mut((0, n), (n, m)).copy_from(&problem.a_eq.transpose());
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n).copy_from(&(-&problem.q));
    rhs.rows_mut(n, m).copy_from(&problem.b_eq);

    let sv = kkt.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smax == 0.0 || smin <= 1e-13 * smax {
        return Err(Error::Degenerate(format!(
            "KKT matrix is singular (smallest/largest singular value {smin:e}/{smax:e})"
        )));
    }
    let lu = kkt.clone().lu();
    let mut sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("LU factorization of the KKT matrix failed".into()))?;
    let resid = &rhs - &kkt * &sol;
    if let Some(corr) = lu.solve(&resid) {
        sol += corr;
    }
    let x = sol.rows(0, n).into_owned();
    let nu = sol.rows(n, m).into_owned();
    let ax = &problem.a_eq * &x;
    let primal = if m == 0 {
        0.0
    } else {
        (&ax - &problem.b_eq).amax() / (1.0 + ax.amax().max(problem.b_eq.amax()))
    };
    let px = &problem.p * &x;
    let aty = problem.a_eq.transpose() * &nu;
    let dual = (&px + &problem.q + &aty).amax() / (1.0 + px.amax().max(problem.q.amax()).max(aty.amax()));
    Ok(QpSolution {
        objective: problem.objective(&x),
        x,
        y_eq: nu,
        iterations: 0,
        primal_residual: primal,
        dual_residual: dual,
        status: QpStatus::Optimal,
        polished: false,
    })
}
