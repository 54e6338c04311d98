use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signals::Trajectory;

const MAX_DRAWS_PER_CENTER: usize = 100;
const DEGENERATE_JITTER: f64 = 1e-6;

/// Radial-basis lifting `z_i = r_i log10(r_i)`, `r_i = ‖x − c_i‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifter {
    centers: Vec<Vec<f64>>,
    seed: u64,
}

/// Samples `n_p` distinct centers uniformly from the bounding box of the
/// observed states. A degenerate box is widened by 1e-6 on every side.
pub fn make_lifter(state_data: &Trajectory, n_p: usize, seed: u64) -> Result<Lifter> {
    if n_p == 0 {
        return Err(Error::config("wkpc.n_p", "lifted dimension must be at least 1"));
    }
    if state_data.is_empty() {
        return Err(Error::Dimension("cannot place centers without state data".into()));
    }
    let dim = state_data.channels();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for s in state_data.samples() {
        for c in 0..dim {
            lo[c] = lo[c].min(s[c]);
            hi[c] = hi[c].max(s[c]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = match draw_distinct(&mut rng, &lo, &hi, n_p) {
        Some(c) => c,
        None => {
            let lo: Vec<f64> = lo.iter().map(|v| v - DEGENERATE_JITTER).collect();
            let hi: Vec<f64> = hi.iter().map(|v| v + DEGENERATE_JITTER).collect();
            draw_distinct(&mut rng, &lo, &hi, n_p)
                .ok_or_else(|| Error::Degenerate("could not draw distinct lifting centers".into()))?
        }
    };
    Ok(Lifter { centers, seed })
}

fn draw_distinct(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64], n_p: usize) -> Option<Vec<Vec<f64>>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(n_p);
    for _ in 0..n_p {
        let mut placed = false;
        for _ in 0..MAX_DRAWS_PER_CENTER {
            let c: Vec<f64> = lo.iter().zip(hi).map(|(&l, &h)| l + (h - l) * rng.random::<f64>()).collect();
            if !centers.contains(&c) {
                centers.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }
    Some(centers)
}

/// `r log10(r)`, extended continuously by 0 at the origin.
pub fn rbf(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r.log10()
    }
}

impl Lifter {
    pub fn from_centers(centers: Vec<Vec<f64>>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::config("wkpc.n_p", "lifted dimension must be at least 1"));
        }
        let dim = centers[0].len();
        if centers.iter().any(|c| c.len() != dim) {
            return Err(Error::Dimension("centers differ in dimension".into()));
        }
        Ok(Self { centers, seed: 0 })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn n_p(&self) -> usize {
        self.centers.len()
    }

    pub fn state_dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lift(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.state_dim() {
            return Err(Error::Dimension(format!(
                "state has {} entries, centers have {}",
                x.len(),
                self.state_dim()
            )));
        }
        Ok(self
            .centers
            .iter()
            .map(|c| rbf(c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()))
            .collect())
    }

    pub fn lift_trajectory(&self, states: &Trajectory) -> Result<Trajectory> {
        let mut flat = Vec::with_capacity(states.len() * self.n_p());
        for s in states.samples() {
            flat.extend(self.lift(s)?);
        }
        Trajectory::from_flat(self.n_p(), states.dt(), flat)
    }
}
