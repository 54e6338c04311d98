//! Independent oracles and generators for the test suites. Nothing here is
//! used by the library proper; enabled for unit tests and via the `oracles`
//! feature for downstream test targets.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::controller::{Controller, Observation};
use crate::harness::Reference;
use crate::plants::{sample_step, Plant, PlantState, Scenario};
use crate::qp::QpProblem;
use crate::signals::{behavioral_residual, DataBuffer};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random strictly convex QP with `m` consistent equalities; `boxed`
/// variables receive bounds around a feasible point, tight enough that some
/// of them bind at the optimum.
pub fn random_qp(rng: &mut ChaCha8Rng, n: usize, m: usize, boxed: usize) -> QpProblem {
    let f = gaussian_matrix(rng, n, n);
    let p = f.transpose() * &f / n as f64 + DMatrix::identity(n, n) * 0.1;
    let q = gaussian_vector(rng, n) * 3.0;
    let a = gaussian_matrix(rng, m, n);
    let x_feas = gaussian_vector(rng, n);
    let b = &a * &x_feas;
    let mut lower = DVector::from_element(n, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(n, f64::INFINITY);
    for j in 0..boxed.min(n) {
        match rng.random_range(0..3) {
            0 => lower[j] = x_feas[j] - rng.random_range(0.0..0.5),
            1 => upper[j] = x_feas[j] + rng.random_range(0.0..0.5),
            _ => {
                lower[j] = x_feas[j] - rng.random_range(0.0..0.5);
                upper[j] = x_feas[j] + rng.random_range(0.0..0.5);
            }
        }
    }
    QpProblem {
        p,
        q,
        a_eq: a,
        b_eq: b,
        lower,
        upper,
    }
}

/// Exact optimizer by enumerating every assignment of the bounded variables
/// to {free, at lower, at upper}, solving each equality-constrained KKT system
/// directly, and keeping the feasible candidate with the smallest objective.
/// Exponential in the number of bounded variables; meant for n ≤ 12 with a
/// handful of boxes.
pub fn active_set_enumeration(problem: &QpProblem) -> Option<DVector<f64>> {
    let n = problem.q.len();
    let m = problem.a_eq.nrows();
    let bounded: Vec<usize> = (0..n)
        .filter(|&j| problem.lower[j].is_finite() || problem.upper[j].is_finite())
        .collect();
    let mut best: Option<(f64, DVector<f64>)> = None;
    let total = 3usize.pow(bounded.len() as u32);
    'patterns: for code in 0..total {
        let mut fixed: Vec<Option<f64>> = vec![None; n];
        let mut c = code;
        for &j in &bounded {
            let choice = c % 3;
            c /= 3;
            match choice {
                1 if problem.lower[j].is_finite() => fixed[j] = Some(problem.lower[j]),
                2 if problem.upper[j].is_finite() => fixed[j] = Some(problem.upper[j]),
                0 => {}
                _ => continue 'patterns,
            }
        }
        let n_fixed = fixed.iter().filter(|f| f.is_some()).count();
        let dim = n + m + n_fixed;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&problem.p);
        for i in 0..n {
            rhs[i] = -problem.q[i];
        }
        for r in 0..m {
            for j in 0..n {
                kkt[(n + r, j)] = problem.a_eq[(r, j)];
                kkt[(j, n + r)] = problem.a_eq[(r, j)];
            }
            rhs[n + r] = problem.b_eq[r];
        }
        let mut row = n + m;
        for (j, f) in fixed.iter().enumerate() {
            if let Some(v) = f {
                kkt[(row, j)] = 1.0;
                kkt[(j, row)] = 1.0;
                rhs[row] = *v;
                row += 1;
            }
        }
        let Some(sol) = kkt.clone().lu().solve(&rhs) else {
            continue;
        };
        if (&kkt * &sol - &rhs).amax() > 1e-8 * (1.0 + rhs.amax()) {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let feasible = (0..n).all(|j| x[j] >= problem.lower[j] - 1e-10 && x[j] <= problem.upper[j] + 1e-10);
        if !feasible {
            continue;
        }
        let obj = 0.5 * x.dot(&(&problem.p * &x)) + problem.q.dot(&x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best.map(|(_, x)| x)
}

/// Rank by Gaussian elimination with partial pivoting; pivots below
/// `rel_tol · max|entry|` count as zero.
pub fn row_reduction_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.amax();
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let (piv, val) = (rank..rows)
            .map(|r| (r, a[(r, col)].abs()))
            .fold((rank, -1.0), |acc, (r, v)| if v > acc.1 { (r, v) } else { acc });
        if val <= rel_tol * scale {
            continue;
        }
        a.swap_rows(rank, piv);
        for r in rank + 1..rows {
            let f = a[(r, col)] / a[(rank, col)];
            if f != 0.0 {
                for c in col..cols {
                    let v = a[(rank, c)];
                    a[(r, c)] -= f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Brute-force persistent-excitation order: scan every feasible depth with a
/// naive Hankel construction and the row-reduction rank.
pub fn brute_force_pe_order(series: &[Vec<f64>], rel_tol: f64) -> usize {
    let t = series.len();
    let ch = series.first().map_or(1, Vec::len);
    let mut order = 0;
    for depth in 1..=t.div_ceil(2) {
        let cols = t - depth + 1;
        let mut h = DMatrix::zeros(depth * ch, cols);
        for i in 0..depth {
            for j in 0..cols {
                for c in 0..ch {
                    h[(i * ch + c, j)] = series[i + j][c];
                }
            }
        }
        if depth * ch <= cols && row_reduction_rank(&h, rel_tol) == depth * ch {
            order = order.max(depth);
        }
    }
    order
}

/// Discrete state-space simulation `x⁺ = A x + B u, y = C x` with the output
/// sampled after the input is applied, i.e. sample k pairs `u_k` with
/// `C x_{k+1}`.
pub fn simulate_lti(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    x0: &DVector<f64>,
    inputs: &[f64],
) -> (Vec<f64>, DVector<f64>) {
    let mut x = x0.clone();
    let mut ys = Vec::with_capacity(inputs.len());
    for &u in inputs {
        x = a * &x + b.column(0) * u;
        ys.push((c * &x)[0]);
    }
    (ys, x)
}

/// Explicit Euler on `steps` uniform steps, combined with a half-step run by
/// Richardson extrapolation (`2·x_{h/2} − x_h`) to second order.
pub fn euler_richardson<F>(deriv: F, x0: &[f64], duration: f64, steps: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let euler = |n: usize| {
        let h = duration / n as f64;
        let mut x = x0.to_vec();
        for _ in 0..n {
            let d = deriv(&x);
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi += h * di;
            }
        }
        x
    };
    let coarse = euler(steps);
    let fine = euler(2 * steps);
    fine.iter().zip(&coarse).map(|(f, c)| 2.0 * f - c).collect()
}

/// Residual of the newest `depth` samples of `buf` against a Hankel built
/// from the older samples, relative to the largest entry of the window.
pub fn trailing_window_residual(buf: &DataBuffer, depth: usize) -> f64 {
    let n = buf.len();
    let (u, y) = (buf.u(), buf.y());
    let (pu, py) = (u.tail(depth), y.tail(depth));
    let scale = pu.as_flat().iter().chain(py.as_flat()).fold(0.0f64, |a, v| a.max(v.abs()));
    let res = behavioral_residual(&u.slice(0, n - depth), &y.slice(0, n - depth), &pu, &py, depth)
        .expect("buffer dimensions are consistent");
    res / scale.max(f64::MIN_POSITIVE)
}

/// Settings of [`run_with_probe`].
pub struct ProbeLoop<'a> {
    pub plant: &'a dyn Plant,
    pub x0: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
    pub substeps: usize,
    pub scenario: &'a Scenario,
    pub reference: &'a Reference,
    pub u_box: Option<[f64; 2]>,
}

/// Closed loop with the controller exposed after every sample. A failed
/// step holds the previous input; `probe(k, controller, failed)` runs after
/// each `observe`.
pub fn run_with_probe<C: Controller>(spec: &ProbeLoop<'_>, ctrl: &mut C, mut probe: impl FnMut(usize, &C, bool)) {
    let plant = spec.plant;
    let mut state = PlantState::new(spec.x0.clone());
    let mut held = vec![0.0; plant.input_dim()];
    for k in 0..spec.steps {
        let y = plant.output(&state.x);
        let r = spec.reference.window(k + 1, ctrl.horizon(), spec.dt);
        let (u, failed) = match ctrl.step(&y, &r) {
            Ok(out) => (out.u, false),
            Err(_) => (held.clone(), true),
        };
        let u: Vec<f64> = match spec.u_box {
            Some([lo, hi]) => u.iter().map(|v| v.clamp(lo, hi)).collect(),
            None => u,
        };
        let (next, y_next) =
            sample_step(plant, &state, &u, spec.dt, spec.substeps, spec.scenario, None).expect("plant step");
        ctrl.observe(&Observation {
            u_applied: &u,
            y: &y_next,
            x: &next.x,
        })
        .expect("observation dimensions");
        state = next;
        held = u;
        probe(k, ctrl, failed);
    }
}
