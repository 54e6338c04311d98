//! Dense convex quadratic programming with equality constraints and box
//! bounds, plus a direct KKT solve used as an oracle.

mod kkt;
mod problem;
mod solver;

pub use kkt::kkt_solve;
pub use problem::QpProblem;
pub use solver::{solve, QpSettings, QpSolution, QpSolver, QpStatus, WarmStart};

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn equality_pins_the_variable() {
        let b = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        let p = QpProblem::unconstrained(DMatrix::identity(3, 3) * 2.0, DVector::zeros(3))
            .with_equalities(DMatrix::identity(3, 3), b.clone());
        let s = solve(&p, 1e-8, 20_000).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert!((&s.x - &b).amax() < 1e-8);
        assert!((s.objective - b.norm_squared()).abs() < 1e-8);
    }

    #[test]
    fn clamped_unconstrained_optimum() {
        // (x − 2)² = x² − 4x + 4
        let p = QpProblem::unconstrained(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, -4.0))
            .with_bounds(DVector::from_element(1, f64::NEG_INFINITY), DVector::from_element(1, 1.0));
        let s = solve(&p, 1e-8, 20_000).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert_eq!(s.x[0], 1.0);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_bounds(DVector::from_vec(vec![0.0, 1.0]), DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(solve(&p, 1e-8, 100).unwrap().status, QpStatus::Infeasible);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_equalities(a, DVector::from_vec(vec![1.0, 3.0]));
        assert_eq!(solve(&p, 1e-8, 1000).unwrap().status, QpStatus::Infeasible);
    }

    #[test]
    fn equalities_conflicting_with_box_are_infeasible() {
        // x0 + x1 = 5 with both variables in [0, 1]
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_equalities(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 5.0))
            .with_bounds(DVector::zeros(2), DVector::from_element(2, 1.0));
        let s = solve(&p, 1e-8, 20_000).unwrap();
        assert_eq!(s.status, QpStatus::Infeasible);
    }

    #[test]
    fn max_iter_reports_best_iterate() {
        let p = QpProblem::unconstrained(DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]), DVector::from_vec(vec![1.0, -1.0]))
            .with_bounds(DVector::from_element(2, -0.3), DVector::from_element(2, 0.3));
        let mut solver = QpSolver::new(QpSettings {
            max_iter: 3,
            check_every: 1,
            polish: false,
            ..QpSettings::default()
        });
        let s = solver.solve(&p, None).unwrap();
        assert_eq!(s.status, QpStatus::MaxIter);
        assert!(s.x.iter().all(|v| v.abs() <= 0.3));
    }

    #[test]
    fn unpolished_admm_still_converges() {
        let p = QpProblem::unconstrained(DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]), DVector::from_vec(vec![-1.0, -1.0]))
            .with_equalities(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 1.0))
            .with_bounds(DVector::zeros(2), DVector::from_element(2, 0.7));
        let mut solver = QpSolver::new(QpSettings {
            polish: false,
            ..QpSettings::default()
        });
        let s = solver.solve(&p, None).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert!(!s.polished);
        // on x0 + x1 = 1 the cost is 2x0² − x0, minimized at x0 = 0.25; that puts
        // x1 = 0.75 above its bound, so the optimum is (0.3, 0.7)
        assert!((s.x[0] - 0.3).abs() < 1e-6, "{}", s.x);
        assert!((s.x[1] - 0.7).abs() < 1e-6, "{}", s.x);
    }

    #[test]
    fn warm_start_reaches_same_point() {
        let p = QpProblem::unconstrained(DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]), DVector::from_vec(vec![-2.0, 1.0]))
            .with_bounds(DVector::from_element(2, -0.5), DVector::from_element(2, 0.5));
        let mut solver = QpSolver::new(QpSettings::default());
        let cold = solver.solve(&p, None).unwrap();
        let warm = solver
            .solve(&p, Some(&WarmStart { x: cold.x.clone(), y_eq: None }))
            .unwrap();
        assert!((&cold.x - &warm.x).amax() < 1e-9);
    }
}
