use crate::error::{Error, Result};

/// Continuous-time state with its simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub x: Vec<f64>,
    pub t: f64,
}

impl PlantState {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x, t: 0.0 }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Divergence {
                t: self.t,
                state: self.x.clone(),
            })
        }
    }
}

/// One classical Runge-Kutta step of `ẋ = f(x, u)` with `u` held constant.
pub fn rk4_step<F>(deriv: F, state: &PlantState, u: &[f64], h: f64) -> Result<PlantState>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64>,
{
    debug_assert!(h > 0.0);
    let x = &state.x;
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(ai, bi)| ai + s * bi).collect() };
    let k1 = deriv(x, u);
    let k2 = deriv(&axpy(x, 0.5 * h, &k1), u);
    let k3 = deriv(&axpy(x, 0.5 * h, &k2), u);
    let k4 = deriv(&axpy(x, h, &k3), u);
    let next: Vec<f64> = (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let out = PlantState {
        x: next,
        t: state.t + h,
    };
    out.ensure_finite()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_rk4_polynomial() {
        let s = rk4_step(|x, _| vec![-x[0]], &PlantState::new(vec![1.0]), &[], 0.1).unwrap();
        // RK4 reproduces e^{-h} through the h⁴ term: 1 − h + h²/2 − h³/6 + h⁴/24
        let h: f64 = 0.1;
        let poly = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((s.x[0] - poly).abs() < 1e-15);
        assert!((s.x[0] - 0.9048375).abs() < 1e-7);
    }

    #[test]
    fn zero_field_leaves_state() {
        let s0 = PlantState::new(vec![0.3, -2.0]);
        let s = rk4_step(|x, _| vec![0.0; x.len()], &s0, &[1.0], 0.5).unwrap();
        assert_eq!(s.x, s0.x);
        assert_eq!(s.t, 0.5);
    }

    #[test]
    fn blow_up_reports_time_and_state() {
        let err = rk4_step(|x, _| vec![x[0] * 1e300], &PlantState::new(vec![1e10]), &[], 1.0).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }
}
