//! Data-enabled predictive control.
//!
//! Each step solves
//!
//! ```text
//! min  Σ_k ‖y_k − yˢ‖²_Q + ‖r_k − yˢ‖²_S + ‖u_k − uˢ‖²_R + λ_g‖g‖² + λ_σ‖σ‖²
//! s.t. U_p g = u_ini,  Y_p g − σ = y_ini,  U_f g = u,  Y_f g = y,
//!      last min(Tini, N) samples of (u, y) equal (uˢ, yˢ),
//!      u ∈ U,  y ∈ Y
//! ```
//!
//! over `(g, u, y, σ, uˢ, yˢ)` and applies the first input.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::controller::{
    box_or_free, check_box, check_excitation, seconds_to_samples, Controller, Diag, Observation, PeCheck, StepOutput,
    Weight, Window,
};
use crate::error::{Error, Result};
use crate::qp::{QpProblem, QpSettings, QpSolution, QpSolver, QpStatus, WarmStart};
use crate::signals::{build_hankel, BufferMode, DataBuffer, Trajectory};

pub const DIAGNOSTIC_COLUMNS: &[&str] = &["step", "objective", "norm_g", "norm_sigma", "solve_time_s", "status"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepcConfig {
    /// Offline data length in seconds.
    pub t_s: f64,
    pub tini_s: f64,
    pub n_s: f64,
    pub q: Weight,
    pub s: Weight,
    pub r: Weight,
    pub lambda_g: f64,
    pub lambda_sigma: f64,
    #[serde(default)]
    pub u_box: Option<[f64; 2]>,
    #[serde(default)]
    pub y_box: Option<[f64; 2]>,
    /// Declared upper bound on the plant order, used by the excitation check.
    #[serde(default)]
    pub order_bound: Option<usize>,
    #[serde(default)]
    pub pe_check: PeCheck,
    #[serde(default)]
    pub buffer: BufferMode,
    /// Extends the slack to the predicted outputs as well.
    #[serde(default)]
    pub slack_on_future: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

pub(crate) fn default_tol() -> f64 {
    1e-8
}

pub(crate) fn default_max_iter() -> usize {
    20_000
}

impl DeepcConfig {
    /// Table values for the pendulum benchmark.
    pub fn benchmark() -> Self {
        Self {
            t_s: 20.0,
            tini_s: 0.3,
            n_s: 0.5,
            q: Weight::Scalar(100.0),
            s: Weight::Scalar(300.0),
            r: Weight::Scalar(10.0),
            lambda_g: 50.0,
            lambda_sigma: 1e7,
            u_box: Some([-3.5, 3.5]),
            y_box: None,
            order_bound: Some(2),
            pe_check: PeCheck::Strict,
            buffer: BufferMode::Frozen,
            slack_on_future: false,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    /// Validates the configuration and converts durations to samples.
    pub fn dims(&self, dt: f64) -> Result<DeepcDims> {
        if !(self.lambda_g > 0.0 && self.lambda_sigma > 0.0) {
            return Err(Error::config("deepc.lambda_g", "λ_g, λ_σ > 0 required"));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::config("deepc.tol", "tolerance and iteration limit must be positive"));
        }
        check_box(self.u_box, "deepc.u_box")?;
        check_box(self.y_box, "deepc.y_box")?;
        let t = seconds_to_samples(self.t_s, dt, "deepc.t_s")?;
        let tini = seconds_to_samples(self.tini_s, dt, "deepc.tini_s")?;
        let n = seconds_to_samples(self.n_s, dt, "deepc.n_s")?;
        if tini == 0 {
            return Err(Error::config("deepc.tini_s", "must span at least one sample"));
        }
        if n == 0 {
            return Err(Error::config("deepc.n_s", "must span at least one sample"));
        }
        if t < tini + n {
            return Err(Error::config(
                "deepc.t_s",
                format!("{t} samples cannot hold a Hankel of depth Tini + N = {}", tini + n),
            ));
        }
        Ok(DeepcDims { t, tini, n })
    }
}

/// Sample counts derived from a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeepcDims {
    pub t: usize,
    pub tini: usize,
    pub n: usize,
}

impl DeepcDims {
    pub fn depth(&self) -> usize {
        self.tini + self.n
    }

    pub fn g_dim(&self) -> usize {
        self.t - self.depth() + 1
    }

    pub fn required_pe_order(&self, order_bound: Option<usize>) -> usize {
        self.depth() + order_bound.unwrap_or(0)
    }
}

/// Hankel blocks split into past and future rows.
#[derive(Debug, Clone)]
pub(crate) struct SplitHankels {
    pub up: DMatrix<f64>,
    pub uf: DMatrix<f64>,
    pub yp: DMatrix<f64>,
    pub yf: DMatrix<f64>,
}

impl SplitHankels {
    pub(crate) fn build(u: &Trajectory, y: &Trajectory, tini: usize, n: usize) -> Result<Self> {
        let hu = build_hankel(u, tini + n)?.with_split(tini, n)?;
        let hy = build_hankel(y, tini + n)?.with_split(tini, n)?;
        Ok(Self {
            up: hu.past().expect("split").into_owned(),
            uf: hu.future().expect("split").into_owned(),
            yp: hy.past().expect("split").into_owned(),
            yf: hy.future().expect("split").into_owned(),
        })
    }

    pub(crate) fn cols(&self) -> usize {
        self.up.ncols()
    }
}

pub struct Deepc {
    config: DeepcConfig,
    dims: DeepcDims,
    q: DMatrix<f64>,
    s: DMatrix<f64>,
    r: DMatrix<f64>,
    m: usize,
    p: usize,
    buffer: DataBuffer,
    hankels: SplitHankels,
    recent_u: Window,
    recent_y: Window,
    solver: QpSolver,
    warm: Option<WarmStart>,
    last_problem: Option<QpProblem>,
    last_solution: Option<QpSolution>,
    last_solve_time: f64,
}

impl Deepc {
    pub fn new(config: DeepcConfig, offline_u: &Trajectory, offline_y: &Trajectory) -> Result<Self> {
        let dt = offline_u.dt();
        let dims = config.dims(dt)?;
        let (m, p) = (offline_u.channels(), offline_y.channels());
        if offline_u.len() != offline_y.len() {
            return Err(Error::Dimension(format!(
                "offline input and output lengths differ: {} vs {}",
                offline_u.len(),
                offline_y.len()
            )));
        }
        if offline_u.len() < dims.t {
            return Err(Error::TooShort {
                len: offline_u.len(),
                depth: dims.t,
            });
        }
        let u = offline_u.tail(dims.t);
        let y = offline_y.tail(dims.t);
        if config.order_bound.is_none() && config.pe_check != PeCheck::Off {
            log::warn!("deepc: no plant order bound declared; checking excitation against L only");
        }
        check_excitation(&u, dims.required_pe_order(config.order_bound), config.pe_check, "deepc")?;
        let q = config.q.to_matrix(p, "deepc.q")?;
        let s = config.s.to_matrix(p, "deepc.s")?;
        let r = config.r.to_matrix(m, "deepc.r")?;
        let hankels = SplitHankels::build(&u, &y, dims.tini, dims.n)?;
        let recent_u = Window::from_tail(&u, dims.tini);
        let recent_y = Window::from_tail(&y, dims.tini);
        let buffer = DataBuffer::with_capacity(u, y, None, dims.t, config.buffer)?;
        let solver = QpSolver::new(QpSettings {
            tol: config.tol,
            max_iter: config.max_iter,
            ..QpSettings::default()
        });
        Ok(Self {
            config,
            dims,
            q,
            s,
            r,
            m,
            p,
            buffer,
            hankels,
            recent_u,
            recent_y,
            solver,
            warm: None,
            last_problem: None,
            last_solution: None,
            last_solve_time: 0.0,
        })
    }

    pub fn dims(&self) -> DeepcDims {
        self.dims
    }

    pub fn buffer(&self) -> &DataBuffer {
        &self.buffer
    }

    pub fn last_problem(&self) -> Option<&QpProblem> {
        self.last_problem.as_ref()
    }

    pub fn last_solution(&self) -> Option<&QpSolution> {
        self.last_solution.as_ref()
    }

    /// Wall time of the last QP solve in seconds.
    pub fn last_solve_time(&self) -> f64 {
        self.last_solve_time
    }

    fn sigma_len(&self) -> usize {
        let rows = if self.config.slack_on_future {
            self.dims.depth()
        } else {
            self.dims.tini
        };
        rows * self.p
    }

    /// Offsets of the blocks `g, u, y, σ, uˢ, yˢ` in the decision vector.
    fn layout(&self) -> [usize; 7] {
        let ng = self.hankels.cols();
        let nu = self.dims.n * self.m;
        let ny = self.dims.n * self.p;
        let mut off = [0; 7];
        let sizes = [ng, nu, ny, self.sigma_len(), self.m, self.p];
        for i in 0..6 {
            off[i + 1] = off[i] + sizes[i];
        }
        off
    }

    /// Assembles the QP for the current windows and `reference`
    /// (`N` samples of `p` channels).
    pub fn assemble(&self, reference: &[Vec<f64>]) -> Result<QpProblem> {
        let (m, p, n, tini) = (self.m, self.p, self.dims.n, self.dims.tini);
        if reference.len() < n || reference.iter().take(n).any(|r| r.len() != p) {
            return Err(Error::Dimension(format!(
                "reference window must hold {n} samples of {p} channels"
            )));
        }
        if !self.recent_u.is_full() || !self.recent_y.is_full() {
            return Err(Error::NotPrimed("deepc windows hold fewer than Tini samples".into()));
        }
        let [og, ou, oy, os, ous, oys, nv] = self.layout();
        let ng = ou - og;
        let mut h = DMatrix::<f64>::zeros(nv, nv);
        let mut c = DVector::<f64>::zeros(nv);
        for k in 0..n {
            let (yk, uk) = (oy + k * p, ou + k * m);
            add_block(&mut h, yk, yk, &self.q, 1.0);
            add_block(&mut h, yk, oys, &self.q, -1.0);
            add_block(&mut h, oys, yk, &self.q, -1.0);
            add_block(&mut h, oys, oys, &self.q, 1.0);
            add_block(&mut h, oys, oys, &self.s, 1.0);
            add_block(&mut h, uk, uk, &self.r, 1.0);
            add_block(&mut h, uk, ous, &self.r, -1.0);
            add_block(&mut h, ous, uk, &self.r, -1.0);
            add_block(&mut h, ous, ous, &self.r, 1.0);
            let sr = &self.s * DVector::from_column_slice(&reference[k]);
            for i in 0..p {
                c[oys + i] -= 2.0 * sr[i];
            }
        }
        for i in og..og + ng {
            h[(i, i)] += self.config.lambda_g;
        }
        for i in os..ous {
            h[(i, i)] += self.config.lambda_sigma;
        }

        let hk = &self.hankels;
        let term = tini.min(n);
        let rows = tini * m + tini * p + n * m + n * p + term * (m + p);
        let mut a = DMatrix::<f64>::zeros(rows, nv);
        let mut b = DVector::<f64>::zeros(rows);
        let mut row = 0;
        a.view_mut((row, og), (tini * m, ng)).copy_from(&hk.up);
        b.rows_mut(row, tini * m).copy_from_slice(self.recent_u.as_slice());
        row += tini * m;
        a.view_mut((row, og), (tini * p, ng)).copy_from(&hk.yp);
        for i in 0..tini * p {
            a[(row + i, os + i)] = -1.0;
        }
        b.rows_mut(row, tini * p).copy_from_slice(self.recent_y.as_slice());
        row += tini * p;
        a.view_mut((row, og), (n * m, ng)).copy_from(&hk.uf);
        for i in 0..n * m {
            a[(row + i, ou + i)] = -1.0;
        }
        row += n * m;
        a.view_mut((row, og), (n * p, ng)).copy_from(&hk.yf);
        for i in 0..n * p {
            a[(row + i, oy + i)] = -1.0;
            if self.config.slack_on_future {
                a[(row + i, os + tini * p + i)] = -1.0;
            }
        }
        row += n * p;
        for k in n - term..n {
            for i in 0..m {
                a[(row, ou + k * m + i)] = 1.0;
                a[(row, ous + i)] = -1.0;
                row += 1;
            }
            for i in 0..p {
                a[(row, oy + k * p + i)] = 1.0;
                a[(row, oys + i)] = -1.0;
                row += 1;
            }
        }
        debug_assert_eq!(row, rows);

        let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
        let mut upper = DVector::from_element(nv, f64::INFINITY);
        let (ulo, uhi) = box_or_free(self.config.u_box);
        let (ylo, yhi) = box_or_free(self.config.y_box);
        for i in ou..oy {
            lower[i] = ulo;
            upper[i] = uhi;
        }
        for i in oy..os {
            lower[i] = ylo;
            upper[i] = yhi;
        }
        Ok(QpProblem::unconstrained(h * 2.0, c)
            .with_equalities(a, b)
            .with_bounds(lower, upper))
    }

    /// Constant `Σ_k ‖r_k‖²_S` dropped from the QP objective.
    fn reference_cost(&self, reference: &[Vec<f64>]) -> f64 {
        reference
            .iter()
            .take(self.dims.n)
            .map(|r| {
                let r = DVector::from_column_slice(r);
                r.dot(&(&self.s * &r))
            })
            .sum()
    }

    fn shifted_warm_start(&self, sol: &QpSolution) -> WarmStart {
        let [_, ou, oy, os, ..] = self.layout();
        let mut x = sol.x.clone();
        for (start, end, width) in [(ou, oy, self.m), (oy, os, self.p)] {
            for i in start..end {
                x[i] = if i + width < end { sol.x[i + width] } else { 0.0 };
            }
        }
        WarmStart { x, y_eq: None }
    }
}

pub(crate) fn add_block(h: &mut DMatrix<f64>, r0: usize, c0: usize, w: &DMatrix<f64>, sign: f64) {
    let mut v = h.view_mut((r0, c0), (w.nrows(), w.ncols()));
    v += w * sign;
}

impl Controller for Deepc {
    fn name(&self) -> &str {
        "DeePC"
    }

    fn horizon(&self) -> usize {
        self.dims.n
    }

    fn diagnostic_columns(&self) -> &'static [&'static str] {
        DIAGNOSTIC_COLUMNS
    }

    fn step(&mut self, _y_now: &[f64], reference: &[Vec<f64>]) -> Result<StepOutput> {
        let problem = self.assemble(reference)?;
        let started = Instant::now();
        let sol = self.solver.solve(&problem, self.warm.as_ref())?;
        self.last_solve_time = started.elapsed().as_secs_f64();
        if sol.status == QpStatus::Infeasible {
            return Err(Error::Infeasible {
                reason: "deepc step".into(),
                dump: problem.to_debug_text(),
            });
        }
        if sol.status == QpStatus::MaxIter {
            log::warn!(
                "deepc: QP hit the iteration limit (primal {:.2e}, dual {:.2e})",
                sol.primal_residual,
                sol.dual_residual
            );
        }
        let [og, ou, _, os, ous, ..] = self.layout();
        let u: Vec<f64> = sol.x.rows(ou, self.m).iter().copied().collect();
        let diagnostics = vec![
            Diag::Num(sol.objective + self.reference_cost(reference)),
            Diag::Num(sol.x.rows(og, ou - og).norm()),
            Diag::Num(sol.x.rows(os, ous - os).norm()),
            Diag::Time,
            Diag::Text(sol.status.as_str()),
        ];
        self.warm = Some(self.shifted_warm_start(&sol));
        self.last_problem = Some(problem);
        self.last_solution = Some(sol);
        Ok(StepOutput { u, diagnostics })
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        if obs.u_applied.len() != self.m || obs.y.len() != self.p {
            return Err(Error::Dimension(format!(
                "observation sizes ({}, {}) do not match ({}, {})",
                obs.u_applied.len(),
                obs.y.len(),
                self.m,
                self.p
            )));
        }
        self.recent_u.push(obs.u_applied)?;
        self.recent_y.push(obs.y)?;
        if self.buffer.mode() == BufferMode::Rolling {
            self.buffer.append(obs.u_applied, obs.y)?;
            self.hankels = SplitHankels::build(self.buffer.u(), self.buffer.y(), self.dims.tini, self.dims.n)?;
        }
        Ok(())
    }
}
