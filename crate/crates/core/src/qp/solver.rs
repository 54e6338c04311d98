use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use super::QpProblem;
use crate::error::Result;
use crate::signals::projection_residual;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl QpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QpStatus::Optimal => "optimal",
            QpStatus::MaxIter => "max_iter",
            QpStatus::Infeasible => "infeasible",
        }
    }
}

/// Solver output. Residuals are relative: the infinity norm of the raw
/// residual divided by `1 + ` the magnitude of the terms it is made of.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of the equality constraints.
    pub y_eq: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub status: QpStatus,
    /// True when the returned point came from the active-set polishing solve.
    pub polished: bool,
}

#[derive(Debug, Clone)]
pub struct QpSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Over-relaxation parameter.
    pub alpha: f64,
    pub sigma: f64,
    pub adaptive_rho: bool,
    pub polish: bool,
    pub scaling_iters: usize,
    pub check_every: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 20_000,
            alpha: 1.6,
            sigma: 1e-6,
            adaptive_rho: true,
            polish: true,
            scaling_iters: 15,
            check_every: 10,
        }
    }
}

/// Initial iterate for a solve; `y_eq` seeds the equality multipliers.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub x: DVector<f64>,
    pub y_eq: Option<DVector<f64>>,
}

/// One-shot solve with default settings apart from `tol` and `max_iter`.
pub fn solve(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution> {
    QpSolver::new(QpSettings {
        tol,
        max_iter,
        ..QpSettings::default()
    })
    .solve(problem, None)
}

const EQ_RHO_FACTOR: f64 = 1e3;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const POLISH_TRIGGER: f64 = 1e-3;
const MAX_POLISH_ATTEMPTS: usize = 25;
const INFEASIBILITY_EPS: f64 = 1e-6;
const FACTOR_CACHE: usize = 4;

/// Operator-splitting QP solver (ADMM on `A x = z`, `z ∈ [l, u]`) with Ruiz
/// equilibration, adaptive penalty, and an active-set polishing step.
///
/// The solver caches the scaling and the Cholesky factors of the reduced
/// system keyed on `(P, A_eq, bounded pattern, ρ)`, so receding-horizon loops
/// that only change vectors reuse factorizations. Results depend only on the
/// inputs, never on cache state.
pub struct QpSolver {
    settings: QpSettings,
    prepared: Option<Prepared>,
    polish_cache: Option<PolishCache>,
}

struct Prepared {
    p: DMatrix<f64>,
    a_eq: DMatrix<f64>,
    bounded: Vec<usize>,
    d: DVector<f64>,
    e: DVector<f64>,
    c: f64,
    p_s: DMatrix<f64>,
    a_s: DMatrix<f64>,
    a_s_t: DMatrix<f64>,
    rho0: f64,
    factors: Vec<(u64, Cholesky<f64, Dyn>)>,
}

struct PolishCache {
    p: DMatrix<f64>,
    a_eq: DMatrix<f64>,
    pattern: Vec<i8>,
    kkt: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

struct Assessment {
    prim: f64,
    dual: f64,
}

impl QpSolver {
    pub fn new(settings: QpSettings) -> Self {
        Self {
            settings,
            prepared: None,
            polish_cache: None,
        }
    }

    pub fn settings(&self) -> &QpSettings {
        &self.settings
    }

    pub fn settings_mut(&mut self) -> &mut QpSettings {
        &mut self.settings
    }

    pub fn solve(&mut self, problem: &QpProblem, warm: Option<&WarmStart>) -> Result<QpSolution> {
        problem.validate()?;
        let n = problem.num_vars();
        let m = problem.num_eq();
        let tol = self.settings.tol;

        if (0..n).any(|j| problem.lower[j] > problem.upper[j]) {
            return Ok(self.infeasible(problem, DVector::zeros(n), 0));
        }
        if m > 0 {
            let gap = projection_residual(&problem.a_eq, &problem.b_eq);
            if gap > 1e-9 * (1.0 + problem.b_eq.amax()) {
                return Ok(self.infeasible(problem, DVector::zeros(n), 0));
            }
        }

        let bounded: Vec<usize> = (0..n)
            .filter(|&j| problem.lower[j].is_finite() || problem.upper[j].is_finite())
            .collect();
        self.prepare(problem, &bounded);
        let prep = self.prepared.as_ref().expect("prepared above");
        let mc = m + bounded.len();
        let (d, e, c) = (prep.d.clone(), prep.e.clone(), prep.c);
        let a_s = prep.a_s.clone();
        let a_s_t = prep.a_s_t.clone();
        let p_s = prep.p_s.clone();

        let mut lo = DVector::zeros(mc);
        let mut hi = DVector::zeros(mc);
        for i in 0..m {
            lo[i] = e[i] * problem.b_eq[i];
            hi[i] = lo[i];
        }
        for (k, &j) in bounded.iter().enumerate() {
            lo[m + k] = e[m + k] * problem.lower[j];
            hi[m + k] = e[m + k] * problem.upper[j];
        }
        let q_s = problem.q.component_mul(&d) * c;

        let mut x = match warm {
            Some(w) if w.x.len() == n => w.x.component_div(&d),
            _ => DVector::zeros(n),
        };
        let mut z = clip(&(&a_s * &x), &lo, &hi);
        let mut y = DVector::zeros(mc);
        if let Some(WarmStart { y_eq: Some(ye), .. }) = warm {
            if ye.len() == m {
                for i in 0..m {
                    y[i] = c * ye[i] / e[i];
                }
            }
        }

        let mut rho = prep.rho0;
        let mut rho_vec = rho_vector(rho, m, mc);
        self.ensure_factor(rho);

        let alpha = self.settings.alpha;
        let sigma = self.settings.sigma;
        let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
        let mut last_pattern: Option<Vec<i8>> = None;
        let mut polish_attempts = 0;

        for iter in 1..=self.settings.max_iter {
            let rhs = &x * sigma - &q_s + &a_s_t * (rho_vec.component_mul(&z) - &y);
            let xt = self.factor(rho).solve(&rhs);
            let zt = &a_s * &xt;
            let x_new = &xt * alpha + &x * (1.0 - alpha);
            let z_relax = &zt * alpha + &z * (1.0 - alpha);
            let z_new = clip(&(&z_relax + y.component_div(&rho_vec)), &lo, &hi);
            let y_new = &y + rho_vec.component_mul(&(&z_relax - &z_new));
            let dy = &y_new - &y;
            x = x_new;
            z = z_new;
            y = y_new;

            if iter % self.settings.check_every != 0 && iter != self.settings.max_iter {
                continue;
            }

            // residuals in the original scaling
            let ax = &a_s * &x;
            let px = &p_s * &x;
            let aty = &a_s_t * &y;
            let prim_abs = (&ax - &z).component_div(&e).amax();
            let prim_scale = ax.component_div(&e).amax().max(z.component_div(&e).amax());
            let dcd = &d * c;
            let dual_abs = (&px + &q_s + &aty).component_div(&dcd).amax();
            let dual_scale = px
                .component_div(&dcd)
                .amax()
                .max(aty.component_div(&dcd).amax())
                .max(q_s.component_div(&dcd).amax());
            let prim_rel = prim_abs / (1.0 + prim_scale);
            let dual_rel = dual_abs / (1.0 + dual_scale);
            let merit = prim_rel.max(dual_rel);
            if best.as_ref().is_none_or(|(b, _, _)| merit < *b) {
                best = Some((merit, x.clone(), y.clone()));
            }

            let near = prim_rel <= POLISH_TRIGGER && dual_rel <= POLISH_TRIGGER;
            if self.settings.polish && near && polish_attempts < MAX_POLISH_ATTEMPTS {
                let pattern = active_pattern(problem, &bounded, m, &z, &y, &lo, &hi);
                if last_pattern.as_ref() != Some(&pattern) {
                    polish_attempts += 1;
                    if let Some(sol) = self.polish(problem, &pattern, iter) {
                        return Ok(sol);
                    }
                    last_pattern = Some(pattern);
                }
            }

            if prim_rel <= tol && dual_rel <= tol {
                let (xo, nu, mu) = unscale(&x, &y, &d, &e, c, m, &bounded, n);
                let xo = clip(&xo, &problem.lower, &problem.upper);
                let a = assess(problem, &xo, &nu, &mu);
                if a.prim <= tol && a.dual <= tol {
                    return Ok(QpSolution {
                        objective: problem.objective(&xo),
                        x: xo,
                        y_eq: nu,
                        iterations: iter,
                        primal_residual: a.prim,
                        dual_residual: a.dual,
                        status: QpStatus::Optimal,
                        polished: false,
                    });
                }
            }

            if prim_rel > tol.sqrt() && certifies_infeasibility(&dy, &a_s_t, &d, &e, &lo, &hi) {
                let (xo, _, _) = unscale(&x, &y, &d, &e, c, m, &bounded, n);
                return Ok(self.infeasible(problem, xo, iter));
            }

            if self.settings.adaptive_rho && iter >= 2 * self.settings.check_every {
                let prim_n = prim_abs_scaled(&ax, &z);
                let dual_n = (&px + &q_s + &aty).amax() / px.amax().max(aty.amax()).max(q_s.amax()).max(1e-30);
                let ratio = (prim_n / dual_n.max(1e-30)).sqrt();
                let proposed = (rho * ratio).clamp(RHO_MIN, RHO_MAX);
                if proposed > 5.0 * rho || proposed < rho / 5.0 {
                    rho = proposed;
                    rho_vec = rho_vector(rho, m, mc);
                    self.ensure_factor(rho);
                }
            }
        }

        let (_, bx, by) = best.unwrap_or((f64::INFINITY, x, y));
        let (xo, nu, mu) = unscale(&bx, &by, &d, &e, c, m, &bounded, n);
        let xo = clip(&xo, &problem.lower, &problem.upper);
        let a = assess(problem, &xo, &nu, &mu);
        Ok(QpSolution {
            objective: problem.objective(&xo),
            x: xo,
            y_eq: nu,
            iterations: self.settings.max_iter,
            primal_residual: a.prim,
            dual_residual: a.dual,
            status: QpStatus::MaxIter,
            polished: false,
        })
    }

    fn infeasible(&self, problem: &QpProblem, x: DVector<f64>, iterations: usize) -> QpSolution {
        QpSolution {
            objective: problem.objective(&x),
            y_eq: DVector::zeros(problem.num_eq()),
            x,
            iterations,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            status: QpStatus::Infeasible,
            polished: false,
        }
    }

    fn prepare(&mut self, problem: &QpProblem, bounded: &[usize]) {
        if let Some(p) = &self.prepared {
            if p.bounded == bounded && p.p == problem.p && p.a_eq == problem.a_eq {
                return;
            }
        }
        let n = problem.num_vars();
        let m = problem.num_eq();
        let mc = m + bounded.len();
        let mut a = DMatrix::zeros(mc, n);
        a.rows_mut(0, m).copy_from(&problem.a_eq);
        for (k, &j) in bounded.iter().enumerate() {
            a[(m + k, j)] = 1.0;
        }
        let mut p_s = problem.p.clone();
        let mut a_s = a;
        let mut d = DVector::from_element(n, 1.0);
        let mut e = DVector::from_element(mc, 1.0);
        for _ in 0..self.settings.scaling_iters {
            let dd = DVector::from_fn(n, |j, _| {
                let norm = p_s.column(j).amax().max(a_s.column(j).amax());
                inv_sqrt_clamped(norm)
            });
            let ee = DVector::from_fn(mc, |i, _| inv_sqrt_clamped(a_s.row(i).amax()));
            for j in 0..n {
                for i in 0..n {
                    p_s[(i, j)] *= dd[i] * dd[j];
                }
                for i in 0..mc {
                    a_s[(i, j)] *= ee[i] * dd[j];
                }
            }
            d.component_mul_assign(&dd);
            e.component_mul_assign(&ee);
        }
        let mean_col = if n == 0 {
            1.0
        } else {
            (0..n).map(|j| p_s.column(j).amax()).sum::<f64>() / n as f64
        };
        let q_norm = problem.q.component_mul(&d).amax();
        let scale = mean_col.max(q_norm);
        let c = if scale > 1e-12 { (1.0 / scale).clamp(1e-4, 1e4) } else { 1.0 };
        p_s *= c;

        let p_rms = p_s.norm() / (n.max(1) as f64).sqrt();
        let a_rms = a_s.norm() / (mc.max(1) as f64).sqrt();
        let rho0 = if mc == 0 || a_rms == 0.0 {
            0.1
        } else {
            (0.1 * p_rms.max(1e-3) / (a_rms * a_rms)).clamp(RHO_MIN, RHO_MAX)
        };
        let a_s_t = a_s.transpose();
        self.prepared = Some(Prepared {
            p: problem.p.clone(),
            a_eq: problem.a_eq.clone(),
            bounded: bounded.to_vec(),
            d,
            e,
            c,
            p_s,
            a_s,
            a_s_t,
            rho0,
            factors: Vec::new(),
        });
    }

    fn ensure_factor(&mut self, rho: f64) {
        let sigma = self.settings.sigma;
        let prep = self.prepared.as_mut().expect("prepared");
        let key = rho.to_bits();
        if prep.factors.iter().any(|(k, _)| *k == key) {
            return;
        }
        let n = prep.p_s.nrows();
        let m = prep.a_eq.nrows();
        let mc = prep.a_s.nrows();
        let rv = rho_vector(rho, m, mc);
        let mut w = prep.a_s.clone();
        for i in 0..mc {
            let s = rv[i].sqrt();
            w.row_mut(i).scale_mut(s);
        }
        let mut k = &prep.p_s + w.transpose() * &w;
        for i in 0..n {
            k[(i, i)] += sigma;
        }
        let k = (&k + k.transpose()) * 0.5;
        let chol = Cholesky::new(k).expect("P + σI + AᵀρA is positive definite for σ > 0");
        if prep.factors.len() >= FACTOR_CACHE {
            prep.factors.remove(0);
        }
        prep.factors.push((key, chol));
    }

    fn factor(&self, rho: f64) -> &Cholesky<f64, Dyn> {
        let key = rho.to_bits();
        let prep = self.prepared.as_ref().expect("prepared");
        &prep
            .factors
            .iter()
            .find(|(k, _)| *k == key)
            .expect("factor computed by ensure_factor")
            .1
    }

    /// Solves the equality-constrained problem with the guessed active bounds
    /// held fixed, and accepts it only if it satisfies the full KKT conditions.
    fn polish(&mut self, problem: &QpProblem, pattern: &[i8], iter: usize) -> Option<QpSolution> {
        let n = problem.num_vars();
        let m = problem.num_eq();
        let tol = self.settings.tol;
        let free: Vec<usize> = (0..n).filter(|&j| pattern[j] == 0).collect();
        let fixed: Vec<usize> = (0..n).filter(|&j| pattern[j] != 0).collect();
        let mut x = DVector::zeros(n);
        for &j in &fixed {
            x[j] = if pattern[j] < 0 { problem.lower[j] } else { problem.upper[j] };
        }
        let nf = free.len();
        let dim = nf + m;

        let reuse = self
            .polish_cache
            .as_ref()
            .is_some_and(|c| c.pattern == pattern && c.p == problem.p && c.a_eq == problem.a_eq);
        if !reuse {
            let mut kkt = DMatrix::zeros(dim, dim);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    kkt[(a, b)] = problem.p[(i, j)];
                }
                for r in 0..m {
                    kkt[(nf + r, a)] = problem.a_eq[(r, i)];
                    kkt[(a, nf + r)] = problem.a_eq[(r, i)];
                }
            }
            let delta = 1e-9 * (1.0 + kkt.amax());
            let mut reg = kkt.clone();
            for i in 0..dim {
                reg[(i, i)] += if i < nf { delta } else { -delta };
            }
            self.polish_cache = Some(PolishCache {
                p: problem.p.clone(),
                a_eq: problem.a_eq.clone(),
                pattern: pattern.to_vec(),
                kkt,
                lu: reg.lu(),
            });
        }
        let cache = self.polish_cache.as_ref().expect("set above");

        let px_fixed = &problem.p * &x;
        let ax_fixed = &problem.a_eq * &x;
        let mut rhs = DVector::zeros(dim);
        for (a, &i) in free.iter().enumerate() {
            rhs[a] = -problem.q[i] - px_fixed[i];
        }
        for r in 0..m {
            rhs[nf + r] = problem.b_eq[r] - ax_fixed[r];
        }
        let mut sol = if dim == 0 { DVector::zeros(0) } else { cache.lu.solve(&rhs)? };
        for _ in 0..if dim == 0 { 0 } else { 8 } {
            let resid = &rhs - &cache.kkt * &sol;
            if resid.amax() <= 1e-15 * (1.0 + rhs.amax()) {
                break;
            }
            sol += cache.lu.solve(&resid)?;
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for (a, &i) in free.iter().enumerate() {
            x[i] = sol[a];
        }
        let nu = sol.rows(nf, m).into_owned();

        for &j in &free {
            let slack = tol * (1.0 + x[j].abs());
            if x[j] < problem.lower[j] - slack || x[j] > problem.upper[j] + slack {
                return None;
            }
        }
        let x = clip(&x, &problem.lower, &problem.upper);
        let grad = &problem.p * &x + &problem.q + problem.a_eq.transpose() * &nu;
        let mut mu = DVector::zeros(n);
        for &j in &fixed {
            mu[j] = -grad[j];
            let pinned = problem.lower[j] == problem.upper[j];
            // at an upper bound the multiplier must be >= 0, at a lower bound <= 0
            if !pinned && ((pattern[j] > 0 && mu[j] < 0.0) || (pattern[j] < 0 && mu[j] > 0.0)) {
                let scale = 1.0 + grad.amax();
                if mu[j].abs() > tol * scale {
                    return None;
                }
                mu[j] = 0.0;
            }
        }
        let a = assess(problem, &x, &nu, &mu);
        if a.prim > tol || a.dual > tol {
            return None;
        }
        Some(QpSolution {
            objective: problem.objective(&x),
            x,
            y_eq: nu,
            iterations: iter,
            primal_residual: a.prim,
            dual_residual: a.dual,
            status: QpStatus::Optimal,
            polished: true,
        })
    }
}

fn inv_sqrt_clamped(norm: f64) -> f64 {
    if norm < 1e-8 {
        1.0
    } else {
        (1.0 / norm.sqrt()).clamp(1e-4, 1e4)
    }
}

fn rho_vector(rho: f64, m: usize, mc: usize) -> DVector<f64> {
    DVector::from_fn(mc, |i, _| if i < m { rho * EQ_RHO_FACTOR } else { rho })
}

fn clip(v: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[i].max(lo[i]).min(hi[i]))
}

fn prim_abs_scaled(ax: &DVector<f64>, z: &DVector<f64>) -> f64 {
    (ax - z).amax() / ax.amax().max(z.amax()).max(1e-30)
}

/// -1: at lower bound, +1: at upper bound, 0: free.
fn active_pattern(
    problem: &QpProblem,
    bounded: &[usize],
    m: usize,
    z: &DVector<f64>,
    y: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> Vec<i8> {
    let mut pattern = vec![0i8; problem.num_vars()];
    for (k, &j) in bounded.iter().enumerate() {
        let r = m + k;
        if z[r] - lo[r] < -y[r] {
            pattern[j] = -1;
        } else if hi[r] - z[r] < y[r] {
            pattern[j] = 1;
        }
    }
    pattern
}

#[allow(clippy::too_many_arguments)]
fn unscale(
    x: &DVector<f64>,
    y: &DVector<f64>,
    d: &DVector<f64>,
    e: &DVector<f64>,
    c: f64,
    m: usize,
    bounded: &[usize],
    n: usize,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let xo = x.component_mul(d);
    let nu = DVector::from_fn(m, |i, _| e[i] * y[i] / c);
    let mut mu = DVector::zeros(n);
    for (k, &j) in bounded.iter().enumerate() {
        mu[j] = e[m + k] * y[m + k] / c;
    }
    (xo, nu, mu)
}

fn assess(problem: &QpProblem, x: &DVector<f64>, nu: &DVector<f64>, mu: &DVector<f64>) -> Assessment {
    let ax = &problem.a_eq * x;
    let prim = if problem.num_eq() == 0 {
        0.0
    } else {
        (&ax - &problem.b_eq).amax() / (1.0 + ax.amax().max(problem.b_eq.amax()))
    };
    let px = &problem.p * x;
    let aty = problem.a_eq.transpose() * nu;
    let raw = &px + &problem.q + &aty + mu;
    let scale = px.amax().max(problem.q.amax()).max(aty.amax()).max(mu.amax());
    Assessment {
        prim,
        dual: raw.amax() / (1.0 + scale),
    }
}

fn certifies_infeasibility(
    dy: &DVector<f64>,
    a_s_t: &DMatrix<f64>,
    d: &DVector<f64>,
    e: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> bool {
    let norm = dy.component_mul(e).amax();
    if norm <= 1e-30 {
        return false;
    }
    let eps = INFEASIBILITY_EPS * norm;
    if (a_s_t * dy).component_div(d).amax() > eps {
        return false;
    }
    let mut support = 0.0;
    for i in 0..dy.len() {
        let v = dy[i];
        if v > 0.0 {
            if hi[i].is_infinite() {
                if v * e[i] > eps {
                    return false;
                }
                continue;
            }
            support += hi[i] * v;
        } else if v < 0.0 {
            if lo[i].is_infinite() {
                if -v * e[i] > eps {
                    return false;
                }
                continue;
            }
            support += lo[i] * v;
        }
    }
    support < -eps
}
