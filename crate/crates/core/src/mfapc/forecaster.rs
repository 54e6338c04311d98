use nalgebra::DVector;

/// Adaptive autoregressive model of the estimate sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PpdForecaster {
    theta: DVector<f64>,
    theta1: DVector<f64>,
    delta: f64,
    m_bound: f64,
}

impl PpdForecaster {
    pub fn new(theta1: Vec<f64>, delta: f64, m_bound: f64) -> Self {
        let theta1 = DVector::from_vec(theta1);
        Self {
            theta: theta1.clone(),
            theta1,
            delta,
            m_bound,
        }
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn order(&self) -> usize {
        self.theta.len()
    }

    /// One normalized-gradient update. `h` holds the previous estimates,
    /// newest first; `phi_now` is the estimate they should have predicted.
    pub fn update(&mut self, h: &[f64], phi_now: f64) {
        let h = DVector::from_column_slice(h);
        let err = phi_now - h.dot(&self.theta);
        self.theta += &h * (err / (self.delta + h.norm_squared()));
        if self.theta.norm() >= self.m_bound {
            self.theta = self.theta1.clone();
        }
    }

    /// Predicts `steps` future estimates from `history` (newest first, at
    /// least `order` entries). Predictions that are too small or change sign
    /// relative to `phi1` are replaced by `phi1`.
    pub fn forecast(&self, history: &[f64], steps: usize, phi1: f64, epsilon: f64) -> Vec<f64> {
        let n_m = self.order();
        let mut window: Vec<f64> = history[..n_m].to_vec();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let mut next: f64 = self.theta.iter().zip(&window).map(|(t, p)| t * p).sum();
            if next.abs() < epsilon || next.signum() != phi1.signum() {
                next = phi1;
            }
            window.rotate_right(1);
            window[0] = next;
            out.push(next);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_regressor_leaves_theta() {
        let mut f = PpdForecaster::new(vec![0.3, 0.2], 0.5, 100.0);
        f.update(&[0.0, 0.0], 1.0);
        assert_eq!(f.theta().as_slice(), &[0.3, 0.2]);
    }

    #[test]
    fn scalar_update_arithmetic() {
        let mut f = PpdForecaster::new(vec![0.0], 0.5, 100.0);
        f.update(&[1.0], 1.0);
        assert!((f.theta()[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn shift_operator_repeats_last_value() {
        let f = PpdForecaster::new(vec![1.0, 0.0, 0.0, 0.0], 0.5, 100.0);
        assert_eq!(f.forecast(&[0.4, 0.1, 0.2, 0.3], 3, 0.1, 1e-5), vec![0.4; 3]);
    }

    #[test]
    fn table_coefficients_forecast() {
        let f = PpdForecaster::new(vec![0.175; 4], 0.5, 100.0);
        let out = f.forecast(&[1.0; 4], 3, 0.1, 1e-5);
        assert!((out[0] - 0.7).abs() < 1e-15);
        assert!((out[1] - 0.6475).abs() < 1e-15);
        assert!((out[2] - 0.175 * (0.6475 + 0.7 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn sign_flip_replaced() {
        let f = PpdForecaster::new(vec![-1.0, 0.0], 0.5, 100.0);
        assert_eq!(f.forecast(&[0.5, 0.5], 2, 0.1, 1e-5), vec![0.1, 0.1]);
    }

    #[test]
    fn large_theta_resets() {
        let mut f = PpdForecaster::new(vec![0.1, 0.1], 1e-9, 1.0);
        f.update(&[1e-3, 0.0], 10.0);
        assert_eq!(f.theta().as_slice(), &[0.1, 0.1]);
    }

    #[test]
    fn constant_history_approaches_unit_sum() {
        let c = 0.8;
        let mut f = PpdForecaster::new(vec![0.175; 4], 0.5, 100.0);
        let mut prev = f64::INFINITY;
        for _ in 0..30 {
            f.update(&[c; 4], c);
            let gap = (c * f.theta().sum() - c).abs();
            assert!(gap < prev || gap < 1e-14);
            prev = gap;
        }
        assert!(prev < 1e-6);
    }
}
