/// Pseudo-partial-derivative estimator with the sign/magnitude reset.
#[derive(Debug, Clone, PartialEq)]
pub struct PpdEstimator {
    phi_hat: f64,
    phi1: f64,
    mu: f64,
    eta: f64,
    epsilon: f64,
    prev_y: Option<f64>,
    prev_u: f64,
    prev_du: f64,
    guard_fired: bool,
}

impl PpdEstimator {
    pub fn new(phi1: f64, mu: f64, eta: f64, epsilon: f64) -> Self {
        Self {
            phi_hat: phi1,
            phi1,
            mu,
            eta,
            epsilon,
            prev_y: None,
            prev_u: 0.0,
            prev_du: 0.0,
            guard_fired: false,
        }
    }

    pub fn phi_hat(&self) -> f64 {
        self.phi_hat
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    /// Last applied input `u_{k-1}`.
    pub fn prev_u(&self) -> f64 {
        self.prev_u
    }

    /// Whether the last update was reset because the raw estimate was too
    /// small or had the wrong sign.
    pub fn step_direction_guard(&self) -> bool {
        self.guard_fired
    }

    /// Raw (pre-reset) update for output increment `dy` after input increment `du`.
    pub fn raw_update(&self, dy: f64, du: f64) -> f64 {
        self.phi_hat + self.eta * du / (self.mu + du * du) * (dy - self.phi_hat * du)
    }

    /// Whether a raw estimate violates the magnitude or sign assumption.
    pub fn violates(&self, raw: f64) -> bool {
        raw.abs() < self.epsilon || raw.signum() != self.phi1.signum()
    }

    /// Incorporates the measurement `y_k` and returns the new estimate.
    pub fn estimate(&mut self, y: f64) -> f64 {
        self.guard_fired = false;
        if let Some(prev_y) = self.prev_y {
            let du = self.prev_du;
            let raw = self.raw_update(y - prev_y, du);
            self.guard_fired = self.violates(raw);
            self.phi_hat = if self.guard_fired || du.abs() <= self.epsilon {
                self.phi1
            } else {
                raw
            };
        }
        self.prev_y = Some(y);
        self.phi_hat
    }

    /// Records the input actually applied after the current estimate.
    pub fn record_input(&mut self, u: f64) {
        self.prev_du = u - self.prev_u;
        self.prev_u = u;
    }
}
