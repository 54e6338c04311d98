use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{rk4_step, Plant, PlantState};
use crate::error::{Error, Result};
use crate::signals::numerical_rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeDomain {
    Discrete,
    Continuous,
}

/// Linear time-invariant plant `x⁺ = A x + B u` (or `ẋ = A x + B u`), `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub domain: TimeDomain,
}

pub fn make_lti(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, domain: TimeDomain) -> Result<LtiPlant> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || c.ncols() != n || n == 0 || b.ncols() == 0 || c.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "inconsistent LTI dimensions: A {}x{}, B {}x{}, C {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    Ok(LtiPlant { a, b, c, domain })
}

/// Random SISO discrete-time plant of the given order (≤ 6) with spectral
/// radius in [0.5, 0.95), controllable and observable. Deterministic in `seed`.
pub fn make_random_stable_lti(order: usize, seed: u64) -> Result<LtiPlant> {
    if order == 0 || order > 6 {
        return Err(Error::Dimension(format!("random LTI order must be in 1..=6, got {order}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut a = DMatrix::from_fn(order, order, |_, _| rng.sample::<f64, _>(StandardNormal));
        let radius = spectral_radius(&a);
        if radius < 1e-6 {
            continue;
        }
        let target = rng.random_range(0.5..0.95);
        a *= target / radius;
        let b = DMatrix::from_fn(order, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = DMatrix::from_fn(1, order, |_, _| rng.sample::<f64, _>(StandardNormal));
        let plant = LtiPlant {
            a,
            b,
            c,
            domain: TimeDomain::Discrete,
        };
        if plant.is_controllable() && plant.is_observable() {
            return Ok(plant);
        }
    }
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.amax() * n as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(squarings);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

impl LtiPlant {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Zero-order-hold discretization of a continuous plant (identity for
    /// discrete plants).
    pub fn discretize(&self, dt: f64) -> LtiPlant {
        if self.domain == TimeDomain::Discrete {
            return self.clone();
        }
        let n = self.order();
        let m = self.b.ncols();
        let mut aug = DMatrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * dt));
        aug.view_mut((0, n), (n, m)).copy_from(&(&self.b * dt));
        let e = expm(&aug);
        LtiPlant {
            a: e.view((0, 0), (n, n)).into_owned(),
            b: e.view((0, n), (n, m)).into_owned(),
            c: self.c.clone(),
            domain: TimeDomain::Discrete,
        }
    }

    pub fn is_controllable(&self) -> bool {
        let n = self.order();
        let m = self.b.ncols();
        let mut ctrb = DMatrix::zeros(n, n * m);
        let mut blk = self.b.clone();
        for i in 0..n {
            ctrb.view_mut((0, i * m), (n, m)).copy_from(&blk);
            blk = &self.a * blk;
        }
        numerical_rank(&ctrb, 1e-9) == n
    }

    pub fn is_observable(&self) -> bool {
        let t = LtiPlant {
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
            domain: self.domain,
        };
        t.is_controllable()
    }

    /// Equilibrium state and output for a constant input (discrete plants).
    pub fn steady_state(&self, u: &[f64]) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.order();
        let bu = &self.b * DVector::from_column_slice(u);
        let lhs = match self.domain {
            TimeDomain::Discrete => DMatrix::identity(n, n) - &self.a,
            TimeDomain::Continuous => -&self.a,
        };
        let x = lhs.lu().solve(&bu)?;
        let y = &self.c * &x;
        Some((x, y))
    }
}

impl Plant for LtiPlant {
    fn state_dim(&self) -> usize {
        self.order()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        (&self.c * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    fn advance(&self, state: &PlantState, u: &[f64], dt: f64, substeps: usize) -> Result<PlantState> {
        match self.domain {
            TimeDomain::Discrete => {
                let x = &self.a * DVector::from_column_slice(&state.x) + &self.b * DVector::from_column_slice(u);
                let next = PlantState {
                    x: x.as_slice().to_vec(),
                    t: state.t + dt,
                };
                next.ensure_finite()?;
                Ok(next)
            }
            TimeDomain::Continuous => {
                let h = dt / substeps as f64;
                let mut s = state.clone();
                for _ in 0..substeps {
                    s = rk4_step(
                        |x, u| {
                            (&self.a * DVector::from_column_slice(x) + &self.b * DVector::from_column_slice(u))
                                .as_slice()
                                .to_vec()
                        },
                        &s,
                        u,
                        h,
                    )?;
                }
                Ok(s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_delay_plant() {
        let p = make_lti(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            TimeDomain::Discrete,
        )
        .unwrap();
        let s = p.advance(&PlantState::new(vec![0.0]), &[2.5], 0.1, 1).unwrap();
        assert_eq!(p.output(&s.x), vec![2.5]);
        let s = p.advance(&s, &[0.0], 0.1, 1).unwrap();
        assert_eq!(p.output(&s.x), vec![0.0]);
    }

    #[test]
    fn random_plants_are_stable() {
        for seed in 0..20 {
            let p = make_random_stable_lti(4, seed).unwrap();
            assert!(spectral_radius(&p.a) < 1.0);
            assert!(p.is_controllable() && p.is_observable());
        }
        assert_eq!(make_random_stable_lti(3, 9).unwrap(), make_random_stable_lti(3, 9).unwrap());
        assert!(make_random_stable_lti(7, 0).is_err());
    }

    #[test]
    fn double_integrator_discretization() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let d = make_lti(a, b, c, TimeDomain::Continuous).unwrap().discretize(0.1);
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!((&d.a - expect).amax() < 1e-15);
        // B_d = (dt²/2, dt)
        assert!((d.b[(0, 0)] - 0.005).abs() < 1e-15 && (d.b[(1, 0)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(make_lti(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2), TimeDomain::Discrete).is_err());
    }

    #[test]
    fn continuous_rk4_tracks_exact_discretization() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.3]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let p = make_lti(a, b, c, TimeDomain::Continuous).unwrap();
        let d = p.discretize(0.1);
        let s = p.advance(&PlantState::new(vec![1.0, 0.0]), &[0.5], 0.1, 10).unwrap();
        let exact = &d.a * DVector::from_vec(vec![1.0, 0.0]) + &d.b * 0.5;
        assert!((s.x[0] - exact[0]).abs() < 1e-9 && (s.x[1] - exact[1]).abs() < 1e-9);
    }
}
