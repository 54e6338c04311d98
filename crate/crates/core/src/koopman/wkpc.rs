use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{make_lifter, Lifter};
use crate::controller::{
    box_or_free, check_box, check_excitation, Controller, Diag, Observation, PeCheck, StepOutput, Weight, Window,
};
use crate::deepc::{add_block, default_max_iter, default_tol, DeepcDims, SplitHankels};
use crate::error::{Error, Result};
use crate::qp::{QpProblem, QpSettings, QpSolution, QpSolver, QpStatus, WarmStart};
use crate::signals::{build_hankel, BufferMode, DataBuffer, Trajectory};

pub use crate::deepc::DIAGNOSTIC_COLUMNS;

/// What the lifting functions are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftSource {
    /// The measured plant state.
    #[default]
    State,
    /// The last `d` outputs, newest first.
    Delay(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WkpcConfig {
    pub t_s: f64,
    pub tini_s: f64,
    pub n_s: f64,
    pub q: Weight,
    pub r: Weight,
    pub lambda_g: f64,
    pub n_p: usize,
    #[serde(default)]
    pub u_box: Option<[f64; 2]>,
    #[serde(default)]
    pub y_box: Option<[f64; 2]>,
    /// Constant input setpoint `uˢ` penalized by `R`.
    #[serde(default)]
    pub u_s: f64,
    #[serde(default)]
    pub lift_source: LiftSource,
    /// Adds the predicted lifted states as free variables tied to `Z_f g`.
    #[serde(default)]
    pub include_future_z: bool,
    /// Draws fresh centers before every step and relifts the whole buffer.
    #[serde(default)]
    pub resample_each_step: bool,
    #[serde(default)]
    pub pe_check: PeCheck,
    #[serde(default)]
    pub buffer: BufferMode,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl WkpcConfig {
    pub fn benchmark() -> Self {
        Self {
            t_s: 20.0,
            tini_s: 0.2,
            n_s: 0.5,
            q: Weight::Scalar(1.0),
            r: Weight::Scalar(0.1),
            lambda_g: 0.1,
            n_p: 10,
            u_box: Some([-3.5, 3.5]),
            y_box: None,
            u_s: 3.355,
            lift_source: LiftSource::State,
            include_future_z: false,
            resample_each_step: false,
            pe_check: PeCheck::Strict,
            buffer: BufferMode::Frozen,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn dims(&self, dt: f64) -> Result<DeepcDims> {
        if !(self.lambda_g > 0.0) {
            return Err(Error::config("wkpc.lambda_g", "λ_g > 0 required"));
        }
        if self.n_p == 0 {
            return Err(Error::config("wkpc.n_p", "lifted dimension must be at least 1"));
        }
        if let LiftSource::Delay(0) = self.lift_source {
            return Err(Error::config("wkpc.lift_source", "delay embedding needs at least one output"));
        }
        if !self.u_s.is_finite() {
            return Err(Error::config("wkpc.u_s", "must be finite"));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::config("wkpc.tol", "tolerance and iteration limit must be positive"));
        }
        check_box(self.u_box, "wkpc.u_box")?;
        check_box(self.y_box, "wkpc.y_box")?;
        let t = crate::controller::seconds_to_samples(self.t_s, dt, "wkpc.t_s")?;
        let tini = crate::controller::seconds_to_samples(self.tini_s, dt, "wkpc.tini_s")?;
        let n = crate::controller::seconds_to_samples(self.n_s, dt, "wkpc.n_s")?;
        if tini == 0 || n == 0 {
            return Err(Error::config("wkpc.tini_s", "Tini and N must each span at least one sample"));
        }
        if t < tini + n {
            return Err(Error::config(
                "wkpc.t_s",
                format!("{t} samples cannot hold a Hankel of depth Tini + N = {}", tini + n),
            ));
        }
        Ok(DeepcDims { t, tini, n })
    }

    pub fn required_pe_order(&self, dims: &DeepcDims) -> usize {
        dims.depth() + self.n_p
    }
}

pub struct Wkpc {
    config: WkpcConfig,
    dims: DeepcDims,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    m: usize,
    p: usize,
    lifter: Lifter,
    steps: u64,
    /// Raw lifting inputs (states or delay vectors) ride in the aux stream.
    buffer: DataBuffer,
    hankels: SplitHankels,
    zp: DMatrix<f64>,
    zf: DMatrix<f64>,
    recent_u: Window,
    recent_y: Window,
    recent_src: Window,
    delay: Option<Window>,
    solver: QpSolver,
    warm: Option<WarmStart>,
    last_problem: Option<QpProblem>,
    last_solution: Option<QpSolution>,
}

impl Wkpc {
    /// Builds the controller; lifting centers are drawn from the offline
    /// lifting inputs with `seed`.
    pub fn new(
        config: WkpcConfig,
        offline_u: &Trajectory,
        offline_y: &Trajectory,
        offline_x: &Trajectory,
        seed: u64,
    ) -> Result<Self> {
        Self::build(config, offline_u, offline_y, offline_x, LifterChoice::Seed(seed))
    }

    pub fn with_lifter(
        config: WkpcConfig,
        offline_u: &Trajectory,
        offline_y: &Trajectory,
        offline_x: &Trajectory,
        lifter: Lifter,
    ) -> Result<Self> {
        Self::build(config, offline_u, offline_y, offline_x, LifterChoice::Given(lifter))
    }

    fn build(
        config: WkpcConfig,
        offline_u: &Trajectory,
        offline_y: &Trajectory,
        offline_x: &Trajectory,
        lifter: LifterChoice,
    ) -> Result<Self> {
        let dims = config.dims(offline_u.dt())?;
        let (m, p) = (offline_u.channels(), offline_y.channels());
        let len = offline_u.len();
        if offline_y.len() != len || offline_x.len() != len {
            return Err(Error::Dimension(format!(
                "offline lengths differ: u {len}, y {}, x {}",
                offline_y.len(),
                offline_x.len()
            )));
        }
        if len < dims.t {
            return Err(Error::TooShort { len, depth: dims.t });
        }
        let source = match config.lift_source {
            LiftSource::State => offline_x.clone(),
            LiftSource::Delay(d) => delay_embed(offline_y, d),
        };
        let u = offline_u.tail(dims.t);
        let y = offline_y.tail(dims.t);
        let src = source.tail(dims.t);
        check_excitation(&u, config.required_pe_order(&dims), config.pe_check, "wkpc")?;
        let lifter = match lifter {
            LifterChoice::Seed(seed) => make_lifter(&src, config.n_p, seed)?,
            LifterChoice::Given(l) => {
                if l.state_dim() != src.channels() {
                    return Err(Error::Dimension(format!(
                        "lifter expects {}-dimensional inputs, lifting source has {}",
                        l.state_dim(),
                        src.channels()
                    )));
                }
                l
            }
        };
        let q = config.q.to_matrix(p, "wkpc.q")?;
        let r = config.r.to_matrix(m, "wkpc.r")?;
        let hankels = SplitHankels::build(&u, &y, dims.tini, dims.n)?;
        let (zp, zf) = lifted_hankels(&lifter, &src, &dims)?;
        let delay = match config.lift_source {
            LiftSource::State => None,
            LiftSource::Delay(d) => Some(Window::from_tail(&offline_y.tail(d), d)),
        };
        let recent_u = Window::from_tail(&u, dims.tini);
        let recent_y = Window::from_tail(&y, dims.tini);
        let recent_src = Window::from_tail(&src, dims.tini);
        let buffer = DataBuffer::with_capacity(u, y, Some(src), dims.t, config.buffer)?;
        let solver = QpSolver::new(QpSettings {
            tol: config.tol,
            max_iter: config.max_iter,
            ..QpSettings::default()
        });
        Ok(Self {
            config,
            dims,
            q,
            r,
            m,
            p,
            lifter,
            steps: 0,
            buffer,
            hankels,
            zp,
            zf,
            recent_u,
            recent_y,
            recent_src,
            delay,
            solver,
            warm: None,
            last_problem: None,
            last_solution: None,
        })
    }

    pub fn dims(&self) -> DeepcDims {
        self.dims
    }

    pub fn lifter(&self) -> &Lifter {
        &self.lifter
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

    fn layout(&self) -> [usize; 5] {
        let ng = self.hankels.cols();
        let nu = self.dims.n * self.m;
        let ny = self.dims.n * self.p;
        let nz = if self.config.include_future_z {
            self.dims.n * self.lifter.n_p()
        } else {
            0
        };
        [0, ng, ng + nu, ng + nu + ny, ng + nu + ny + nz]
    }

    fn z_ini(&self) -> Result<Vec<f64>> {
        let dim = self.lifter.state_dim();
        let mut z = Vec::with_capacity(self.dims.tini * self.lifter.n_p());
        for s in self.recent_src.as_slice().chunks(dim) {
            z.extend(self.lifter.lift(s)?);
        }
        Ok(z)
    }

    pub fn assemble(&self, reference: &[Vec<f64>]) -> Result<QpProblem> {
        let (m, p, n, tini) = (self.m, self.p, self.dims.n, self.dims.tini);
        let np = self.lifter.n_p();
        if reference.len() < n || reference.iter().take(n).any(|r| r.len() != p) {
            return Err(Error::Dimension(format!(
                "reference window must hold {n} samples of {p} channels"
            )));
        }
        let [og, ou, oy, oz, nv] = self.layout();
        let ng = ou - og;
        let mut h = DMatrix::<f64>::zeros(nv, nv);
        let mut c = DVector::<f64>::zeros(nv);
        let us = DVector::from_element(m, self.config.u_s);
        let rus = &self.r * &us;
        for k in 0..n {
            let (yk, uk) = (oy + k * p, ou + k * m);
            add_block(&mut h, yk, yk, &self.q, 1.0);
            add_block(&mut h, uk, uk, &self.r, 1.0);
            let qr = &self.q * DVector::from_column_slice(&reference[k]);
            for i in 0..p {
                c[yk + i] -= 2.0 * qr[i];
            }
            for i in 0..m {
                c[uk + i] -= 2.0 * rus[i];
            }
        }
        for i in og..ou {
            h[(i, i)] += self.config.lambda_g;
        }

        let hk = &self.hankels;
        let zrows = if self.config.include_future_z { n * np } else { 0 };
        let rows = tini * (np + m + p) + n * (m + p) + zrows;
        let mut a = DMatrix::<f64>::zeros(rows, nv);
        let mut b = DVector::<f64>::zeros(rows);
        let mut row = 0;
        a.view_mut((row, og), (tini * np, ng)).copy_from(&self.zp);
        b.rows_mut(row, tini * np).copy_from_slice(&self.z_ini()?);
        row += tini * np;
        a.view_mut((row, og), (tini * m, ng)).copy_from(&hk.up);
        b.rows_mut(row, tini * m).copy_from_slice(self.recent_u.as_slice());
        row += tini * m;
        a.view_mut((row, og), (tini * p, ng)).copy_from(&hk.yp);
        b.rows_mut(row, tini * p).copy_from_slice(self.recent_y.as_slice());
        row += tini * p;
        for (block, off, width) in [(&hk.uf, ou, n * m), (&hk.yf, oy, n * p)] {
            a.view_mut((row, og), (width, ng)).copy_from(block);
            for i in 0..width {
                a[(row + i, off + i)] = -1.0;
            }
            row += width;
        }
        if self.config.include_future_z {
            a.view_mut((row, og), (n * np, ng)).copy_from(&self.zf);
            for i in 0..n * np {
                a[(row + i, oz + i)] = -1.0;
            }
            row += n * np;
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
        for i in oy..oy + n * p {
            lower[i] = ylo;
            upper[i] = yhi;
        }
        Ok(QpProblem::unconstrained(h * 2.0, c)
            .with_equalities(a, b)
            .with_bounds(lower, upper))
    }

    fn constant_cost(&self, reference: &[Vec<f64>]) -> f64 {
        let us = DVector::from_element(self.m, self.config.u_s);
        let per_step_u = us.dot(&(&self.r * &us));
        reference
            .iter()
            .take(self.dims.n)
            .map(|r| {
                let r = DVector::from_column_slice(r);
                r.dot(&(&self.q * &r)) + per_step_u
            })
            .sum()
    }

    fn relift(&mut self) -> Result<()> {
        let src = self.buffer.aux().expect("wkpc buffer carries lifting inputs");
        let (zp, zf) = lifted_hankels(&self.lifter, src, &self.dims)?;
        self.zp = zp;
        self.zf = zf;
        Ok(())
    }
}

enum LifterChoice {
    Seed(u64),
    Given(Lifter),
}

fn lifted_hankels(lifter: &Lifter, src: &Trajectory, dims: &DeepcDims) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let z = lifter.lift_trajectory(src)?;
    let hz = build_hankel(&z, dims.depth())?.with_split(dims.tini, dims.n)?;
    Ok((
        hz.past().expect("split").into_owned(),
        hz.future().expect("split").into_owned(),
    ))
}

/// Stacks `[y_k, y_{k-1}, .., y_{k-d+1}]`; samples before the start are zero.
fn delay_embed(y: &Trajectory, d: usize) -> Trajectory {
    let p = y.channels();
    let mut flat = Vec::with_capacity(y.len() * p * d);
    for k in 0..y.len() {
        for lag in 0..d {
            if k >= lag {
                flat.extend_from_slice(y.sample(k - lag));
            } else {
                flat.extend(std::iter::repeat_n(0.0, p));
            }
        }
    }
    Trajectory::from_flat(p * d, y.dt(), flat).expect("consistent by construction")
}

impl Controller for Wkpc {
    fn name(&self) -> &str {
        "WKPC"
    }

    fn horizon(&self) -> usize {
        self.dims.n
    }

    fn diagnostic_columns(&self) -> &'static [&'static str] {
        DIAGNOSTIC_COLUMNS
    }

    fn step(&mut self, _y_now: &[f64], reference: &[Vec<f64>]) -> Result<StepOutput> {
        if self.config.resample_each_step {
            let src = self.buffer.aux().expect("wkpc buffer carries lifting inputs");
            self.lifter = make_lifter(src, self.config.n_p, self.lifter.seed().wrapping_add(1))?;
            self.relift()?;
        }
        self.steps += 1;
        let problem = self.assemble(reference)?;
        let started = Instant::now();
        let sol = self.solver.solve(&problem, self.warm.as_ref())?;
        let _elapsed = started.elapsed();
        if sol.status == QpStatus::Infeasible {
            return Err(Error::Infeasible {
                reason: "wkpc step".into(),
                dump: problem.to_debug_text(),
            });
        }
        if sol.status == QpStatus::MaxIter {
            log::warn!(
                "wkpc: QP hit the iteration limit (primal {:.2e}, dual {:.2e})",
                sol.primal_residual,
                sol.dual_residual
            );
        }
        let [og, ou, oy, oz, nv] = self.layout();
        let u: Vec<f64> = sol.x.rows(ou, self.m).iter().copied().collect();
        let diagnostics = vec![
            Diag::Num(sol.objective + self.constant_cost(reference)),
            Diag::Num(sol.x.rows(og, ou - og).norm()),
            Diag::Num(0.0),
            Diag::Time,
            Diag::Text(sol.status.as_str()),
        ];
        let mut x = sol.x.clone();
        for (start, end, width) in [(ou, oy, self.m), (oy, oz, self.p), (oz, nv, self.lifter.n_p())] {
            for i in start..end {
                x[i] = if i + width < end { sol.x[i + width] } else { 0.0 };
            }
        }
        self.warm = Some(WarmStart { x, y_eq: None });
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
        let src: Vec<f64> = match self.delay.as_mut() {
            None => obs.x.to_vec(),
            Some(w) => {
                w.push(obs.y)?;
                // the window stores oldest first; the embedding is newest first
                w.as_slice().chunks(self.p).rev().flatten().copied().collect()
            }
        };
        if src.len() != self.lifter.state_dim() {
            return Err(Error::Dimension(format!(
                "lifting input has {} entries, lifter expects {}",
                src.len(),
                self.lifter.state_dim()
            )));
        }
        self.recent_u.push(obs.u_applied)?;
        self.recent_y.push(obs.y)?;
        self.recent_src.push(&src)?;
        if self.buffer.mode() == BufferMode::Rolling {
            self.buffer.append_with_aux(obs.u_applied, obs.y, &src)?;
            self.hankels = SplitHankels::build(self.buffer.u(), self.buffer.y(), self.dims.tini, self.dims.n)?;
            self.relift()?;
        }
        Ok(())
    }
}
