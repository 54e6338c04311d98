//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. Run with `cargo test -p ddpc-cli --test acceptance`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use ddpc_cli::{cmd_compare, Overrides};
use ddpc_core::controller::{Controller, Diag, PeCheck, Weight};
use ddpc_core::deepc::{Deepc, DeepcConfig};
use ddpc_core::harness::{compute_metrics, offline_excitation, run_closed_loop, LoopSpec, SeedRecord, Unit, TIMING_COLUMNS};
use ddpc_core::koopman::{Wkpc, WkpcConfig};
use ddpc_core::mfapc::{Mfapc, MfapcConfig, PpdEstimator};
use ddpc_core::plants::{
    make_lti, make_random_stable_lti, pendulum_deriv, LtiPlant, Pendulum, PendulumParams, Plant, PlantState, Scenario,
    TimeDomain,
};
use ddpc_core::qp::{kkt_solve, solve, QpStatus};
use ddpc_core::signals::{behavioral_residual, persistent_excitation_order, BufferMode, Trajectory};
use ddpc_core::testing::{
    active_set_enumeration, brute_force_pe_order, euler_richardson, gaussian_vector, random_qp, rng, run_with_probe,
    simulate_lti, trailing_window_residual, ProbeLoop,
};
use ddpc_core::Reference;
use nalgebra::DMatrix;
use rand::Rng;

const LEMMA_RESIDUAL: f64 = 1e-8;
const LEMMA_BUDGET_S: f64 = 10.0;
const QP_AGREEMENT: f64 = 1e-6;
const QP_BUDGET_S: f64 = 30.0;
const DEEPC_STEADY_ERROR: f64 = 1e-4;
const DEEPC_SETTLE_S: f64 = 5.0;
const DEEPC_SLACK: f64 = 1e-5;
const ESTIMATOR_REL_ERROR: f64 = 0.01;
const ESTIMATOR_STEPS: usize = 50;
const REGULATION_ERROR: f64 = 1e-3;
const REGULATION_STEPS: usize = 200;
const BENCH_MIN_ERROR_DEG: f64 = 1e-2;
const BENCH_MAX_INPUT: f64 = 3.5;
const BENCH_TIME_RATIO: f64 = 0.1;
const BENCH_BUDGET_S: f64 = 60.0;
const RK4_AGREEMENT: f64 = 1e-6;
const ENERGY_DRIFT: f64 = 1e-6;
const ENERGY_SUBSTEPS: usize = 10;

/// Criteria that cannot pass as stated; see the README for the analysis.
const KNOWN_UNATTAINABLE: &[u32] = &[8];

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: u32, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

fn scalar(v: &[f64]) -> Trajectory {
    Trajectory::from_scalar(v, 0.1).unwrap()
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn fundamental_lemma() -> Outcome {
    let started = Instant::now();
    let depth = 6;
    let mut worst = 0.0f64;
    let mut pe_ok = true;
    for sys in 0..20u64 {
        let order = 1 + (sys as usize % 4);
        let plant = make_random_stable_lti(order, 1000 + sys).unwrap();
        let mut r = rng(sys);
        let u: Vec<f64> = (0..80).map(|_| r.random_range(-1.0..1.0)).collect();
        pe_ok &= persistent_excitation_order(&scalar(&u)) >= depth + order;
        let (y, _) = simulate_lti(&plant.a, &plant.b, &plant.c, &gaussian_vector(&mut r, order), &u);
        for _ in 0..10 {
            let pu: Vec<f64> = (0..depth).map(|_| r.random_range(-1.0..1.0)).collect();
            let (py, _) = simulate_lti(&plant.a, &plant.b, &plant.c, &gaussian_vector(&mut r, order), &pu);
            let res = behavioral_residual(&scalar(&u), &scalar(&y), &scalar(&pu), &scalar(&py), depth).unwrap();
            worst = worst.max(res);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        1,
        "fundamental lemma",
        pe_ok && worst < LEMMA_RESIDUAL && secs < LEMMA_BUDGET_S,
        format!("max residual {worst:.2e} over 200 probes, inputs PE: {pe_ok}, {secs:.2} s"),
    )
}

fn pe_checker() -> Outcome {
    let mut series: Vec<Vec<Vec<f64>>> = Vec::new();
    for c in [0.0, 1.0, -2.5, 7.0, 1e-3] {
        series.push(vec![vec![c]; 25]);
    }
    for period in 2..=16 {
        let mut r = rng(period as u64);
        let base: Vec<f64> = (0..period).map(|_| r.random_range(-1.0..1.0)).collect();
        series.push((0..40).map(|k| vec![base[k % period]]).collect());
    }
    let mut r = rng(99);
    for i in 0..30 {
        let ch = 1 + i % 2;
        let len = r.random_range(3..50);
        series.push((0..len).map(|_| (0..ch).map(|_| r.random_range(-1.0..1.0)).collect()).collect());
    }
    let mismatches = series
        .iter()
        .filter(|s| {
            let t = Trajectory::from_samples(s[0].len(), 0.1, s).unwrap();
            persistent_excitation_order(&t) != brute_force_pe_order(s, 1e-9)
        })
        .count();
    outcome(
        2,
        "persistent-excitation order",
        mismatches == 0,
        format!("{} series (5 constant, 15 periodic, 30 random), {mismatches} mismatches", series.len()),
    )
}

fn qp_oracles() -> Outcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut non_optimal = 0;
    let mut r = rng(2024);
    for case in 0..100 {
        let (p, oracle) = if case < 60 {
            let n = r.random_range(2..=12);
            let m = r.random_range(0..n.min(6));
            let boxed = r.random_range(1..=n.min(7));
            let p = random_qp(&mut r, n, m, boxed);
            let x = active_set_enumeration(&p).expect("feasible by construction");
            (p, x)
        } else {
            let n = r.random_range(2..=50);
            let m = r.random_range(0..=n.min(20) - 1);
            let p = random_qp(&mut r, n, m, 0);
            let x = kkt_solve(&p).unwrap().x;
            (p, x)
        };
        let s = solve(&p, 1e-8, 20_000).unwrap();
        non_optimal += (s.status != QpStatus::Optimal) as usize;
        worst = worst.max((&s.x - &oracle).amax());
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        3,
        "QP oracle equivalence",
        worst < QP_AGREEMENT && non_optimal == 0 && secs < QP_BUDGET_S,
        format!("100 problems (60 boxed, 40 equality-only), max deviation {worst:.2e}, {secs:.2} s"),
    )
}

fn deepc_regulation() -> Outcome {
    let dt = 0.1;
    let plant = make_random_stable_lti(3, 21).unwrap();
    let cfg = DeepcConfig {
        t_s: 10.0,
        tini_s: 0.4,
        n_s: 1.0,
        q: Weight::Scalar(1.0),
        s: Weight::Scalar(10.0),
        r: Weight::Scalar(0.01),
        lambda_g: 1e-6,
        lambda_sigma: 1e6,
        u_box: None,
        y_box: None,
        order_bound: Some(3),
        pe_check: PeCheck::Strict,
        buffer: BufferMode::Frozen,
        slack_on_future: false,
        tol: 1e-10,
        max_iter: 50_000,
    };
    let off = offline_excitation(&plant, &[0.0; 3], cfg.t_s, dt, 1, 1.0, 5).unwrap();
    let mut ctrl = Deepc::new(cfg, &off.u, &off.y).unwrap();
    let reference = Reference::Constant { value: 1.0, unit: Unit::Rad };
    let scenario = Scenario::default();
    let spec = LoopSpec {
        plant: &plant,
        x0: off.final_state.clone(),
        dt,
        substeps: 1,
        duration_s: 10.0,
        reference: &reference,
        scenario: &scenario,
        u_box: None,
        seeds: SeedRecord::from_seed(0),
        error_scale: 1.0,
    };
    let res = run_closed_loop(&spec, &mut ctrl).unwrap();
    let settle = (DEEPC_SETTLE_S / dt).round() as usize;
    let late_error = max_abs(res.errors()[settle..].iter().copied());
    let sigma_col = res.diagnostics.columns.iter().position(|c| *c == "norm_sigma").unwrap();
    let sigma = max_abs(res.diagnostics.rows.iter().map(|row| match row[sigma_col] {
        Diag::Num(v) => v,
        _ => f64::INFINITY,
    }));
    outcome(
        4,
        "DeePC regulation",
        res.abort.is_none() && late_error < DEEPC_STEADY_ERROR && sigma < DEEPC_SLACK,
        format!("max |e| after {DEEPC_SETTLE_S} s {late_error:.2e}, max ||sigma|| {sigma:.2e}"),
    )
}

fn estimator_convergence() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for b in [0.5, 2.0, 5.0] {
        let cfg = MfapcConfig::benchmark();
        let mut est = PpdEstimator::new(cfg.phi0, cfg.mu, cfg.eta, cfg.epsilon);
        let (mut y, mut u) = (0.0, 0.0);
        let mut hit = None;
        for k in 0..ESTIMATOR_STEPS {
            let phi = est.estimate(y);
            if hit.is_none() && ((phi - b) / b).abs() < ESTIMATOR_REL_ERROR {
                hit = Some(k);
            }
            let du = if k % 2 == 0 { 1.0 } else { -0.7 };
            u += du;
            est.record_input(u);
            y += b * du;
        }
        pass &= hit.is_some();
        details.push(format!("b={b}: step {}", hit.map_or("none".into(), |k| k.to_string())));
    }
    outcome(5, "MFAPC estimator convergence", pass, details.join(", "))
}

fn mfapc_regulation() -> Outcome {
    let lag = make_lti(
        DMatrix::from_element(1, 1, 0.9),
        DMatrix::from_element(1, 1, 0.5),
        DMatrix::from_element(1, 1, 1.0),
        TimeDomain::Discrete,
    )
    .unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for lambda in [0.1, 0.37, 1.0] {
        let cfg = MfapcConfig {
            lambda,
            ..MfapcConfig::benchmark()
        };
        let mut ctrl = Mfapc::new(cfg, 0.1).unwrap();
        let reference = Reference::Constant { value: 1.0, unit: Unit::Rad };
        let scenario = Scenario::default();
        let spec = LoopSpec {
            plant: &lag,
            x0: vec![0.0],
            dt: 0.1,
            substeps: 1,
            duration_s: 30.0,
            reference: &reference,
            scenario: &scenario,
            u_box: None,
            seeds: SeedRecord::from_seed(0),
            error_scale: 1.0,
        };
        let res = run_closed_loop(&spec, &mut ctrl).unwrap();
        let errors = res.errors();
        // first step after which |e| stays below the tolerance
        let settled = errors.iter().rposition(|e| e.abs() >= REGULATION_ERROR).map_or(0, |k| k + 1);
        pass &= res.abort.is_none() && settled <= REGULATION_STEPS;
        details.push(format!("lambda={lambda}: step {settled}"));
    }
    outcome(6, "MFAPC regulation", pass, details.join(", "))
}

fn benchmark_and_determinism() -> (Outcome, Outcome) {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let started = Instant::now();
    let run = |dir: &Path| {
        cmd_compare(
            "preset:paper_benchmark",
            &Overrides {
                out: Some(dir.to_path_buf()),
                seed: None,
                quiet: true,
            },
        )
    };
    let first = run(dirs[0].path());
    let secs = started.elapsed().as_secs_f64();
    let bench = match &first {
        Err(e) => outcome(7, "benchmark reproduction", false, format!("compare failed: {e}")),
        Ok(cmp) => {
            let metric = |name: &str, key: &str| {
                cmp.runs
                    .iter()
                    .find(|(n, _)| *n == name)
                    .and_then(|(_, r)| r.as_ref().ok())
                    .and_then(|r| r.metrics.get(key))
                    .unwrap_or(f64::NAN)
            };
            let max_u = cmp
                .runs
                .iter()
                .filter_map(|(_, r)| r.as_ref().ok())
                .map(|r| max_abs(r.u.as_flat().iter().copied()))
                .fold(0.0, f64::max);
            let min_err = metric("MFAPC-CFDL", "min_abs_error_deg");
            let t_mfapc = metric("MFAPC-CFDL", "mean_opt_time_s");
            let (t_deepc, t_wkpc) = (metric("DeePC", "mean_opt_time_s"), metric("WKPC", "mean_opt_time_s"));
            let a = min_err < BENCH_MIN_ERROR_DEG;
            let b = max_u <= BENCH_MAX_INPUT;
            let c = t_mfapc <= BENCH_TIME_RATIO * t_deepc && t_mfapc <= BENCH_TIME_RATIO * t_wkpc;
            outcome(
                7,
                "benchmark reproduction",
                a && b && c && secs < BENCH_BUDGET_S,
                format!(
                    "(a) MFAPC min |e| {min_err:.2e} deg, (b) max |u| {max_u:.4}, (c) mean step {t_mfapc:.1e} s vs {t_deepc:.1e} / {t_wkpc:.1e} s, {secs:.1} s"
                ),
            )
        }
    };
    let second = run(dirs[1].path());
    let det = match (&first, &second) {
        (Ok(_), Ok(_)) => {
            let (a, b) = (csv_tree(dirs[0].path()), csv_tree(dirs[1].path()));
            let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
            outcome(
                10,
                "determinism",
                !a.is_empty() && a.len() == b.len() && differing.is_empty(),
                format!("{} CSV files compared without timing, {} differ", a.len(), differing.len()),
            )
        }
        _ => outcome(10, "determinism", false, "compare failed".into()),
    };
    (bench, det)
}

/// Every CSV under `dir`, keyed by relative path, with timing removed.
fn csv_tree(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let key = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, strip_timing(&std::fs::read_to_string(&path).unwrap()));
            }
        }
    }
    out
}

fn strip_timing(csv: &str) -> String {
    let mut lines = csv.lines();
    let Some(header) = lines.next() else {
        return String::new();
    };
    let keep: Vec<bool> = header.split(',').map(|c| !TIMING_COLUMNS.contains(&c)).collect();
    let filter = |line: &str| -> String {
        line.split(',')
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(v, _)| v)
            .collect::<Vec<_>>()
            .join(",")
    };
    std::iter::once(filter(header))
        .chain(
            lines
                .filter(|l| !TIMING_COLUMNS.contains(&l.split(',').next().unwrap_or_default()))
                .map(filter),
        )
        .collect::<Vec<_>>()
        .join("\n")
}

fn integrator() -> Outcome {
    let params = PendulumParams::default();
    let plant = Pendulum::new(params).unwrap();
    let mut worst = 0.0f64;
    for (x0, tau) in [([0.0, 0.0], 2.0), ([0.4, -1.0], 0.0), ([0.35, 0.0], 3.355)] {
        let mut s = PlantState::new(x0.to_vec());
        for _ in 0..10 {
            s = plant.advance(&s, &[tau], 0.1, 10).unwrap();
        }
        let oracle = euler_richardson(|x| pendulum_deriv(&params, x, tau).to_vec(), &x0, 1.0, 200_000);
        worst = worst.max(max_abs(s.x.iter().zip(&oracle).map(|(a, b)| a - b)));
    }
    let frictionless = PendulumParams { k: 0.0, ..params };
    let plant = Pendulum::new(frictionless).unwrap();
    let mut s = PlantState::new(vec![0.5, 0.0]);
    let e0 = frictionless.energy(&s.x);
    let mut drift = 0.0f64;
    for _ in 0..100 {
        s = plant.advance(&s, &[0.0], 0.1, ENERGY_SUBSTEPS).unwrap();
        drift = drift.max((frictionless.energy(&s.x) - e0).abs() / e0);
    }
    // RK4 removes (ωh)⁶/72 of the oscillator energy per step
    let omega = (params.grav / params.r).sqrt();
    let h = 0.1 / ENERGY_SUBSTEPS as f64;
    let floor = (10.0 / h) * (omega * h).powi(6) / 72.0;
    outcome(
        8,
        "integrator verification",
        worst < RK4_AGREEMENT && drift < ENERGY_DRIFT,
        format!(
            "RK4 vs extrapolated Euler {worst:.2e}; energy drift {drift:.2e} at {ENERGY_SUBSTEPS} substeps (RK4 small-angle floor {floor:.2e})"
        ),
    )
}

/// Errors, inputs, step times, dt, error scale and the expected metrics.
type MetricCase = (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64, [f64; 5]);

fn metric_exactness() -> Outcome {
    let scale = 180.0 / std::f64::consts::PI;
    let saw: Vec<f64> = (0..8).map(|k| (k % 4) as f64 - 1.5).collect();
    let cases: [MetricCase; 3] = [
        (
            vec![1.0, -2.0, 3.0, -4.0],
            vec![0.5, -1.5, 1.0, 0.0],
            vec![1e-3, 2e-3, 3e-3, 4e-3],
            0.1,
            1.0,
            [10.0, 10.0 * 0.1, 4.0, 1.5, (((1e-3 + 2e-3) + 3e-3) + 4e-3) / 4.0],
        ),
        (saw.clone(), saw, vec![0.0; 8], 0.5, 1.0, [8.0, 4.0, 0.5, 1.5, 0.0]),
        (
            vec![0.1, -0.2, 0.05],
            vec![3.5, -3.5, 0.0],
            vec![0.5; 3],
            0.1,
            scale,
            [
                (0.1 * scale + 0.2 * scale) + 0.05 * scale,
                ((0.1 * scale + 0.2 * scale) + 0.05 * scale) * 0.1,
                0.05 * scale,
                3.5,
                0.5,
            ],
        ),
    ];
    let mut exact = 0;
    for (e, u, t, dt, s, want) in &cases {
        let m = compute_metrics(e, u, t, *dt, *s).unwrap();
        let got = [m.abs_integral_error_deg, m.aie_dt, m.min_abs_error_deg, m.max_abs_input, m.mean_opt_time_s];
        exact += (got == *want) as usize;
    }
    outcome(9, "metric exactness", exact == cases.len(), format!("{exact}/{} vectors exact", cases.len()))
}

const FLIP_K: usize = 100;
const FLIP_T_S: f64 = 10.0;
const FLIP_DEPTH: usize = 8;

fn flip_residuals<C: Controller>(ctrl: &mut C, plant: &LtiPlant, x0: Vec<f64>, residual: impl Fn(&C) -> f64) -> Vec<f64> {
    let scenario = Scenario {
        direction_flip_time_s: Some(FLIP_K as f64 * 0.1),
        ..Scenario::default()
    };
    let reference = Reference::Piecewise {
        times_s: (0..40).map(f64::from).collect(),
        values: (0..40).map(|k| if k % 2 == 0 { 0.5 } else { -0.5 }).collect(),
        unit: Unit::Rad,
    };
    let spec = ProbeLoop {
        plant,
        x0,
        steps: FLIP_K + 150,
        dt: 0.1,
        substeps: 1,
        scenario: &scenario,
        reference: &reference,
        u_box: Some([-2.0, 2.0]),
    };
    let mut res = Vec::new();
    run_with_probe(&spec, ctrl, |_, c, _| res.push(residual(c)));
    res
}

/// One-second bin means over the T seconds after the flip; decreasing means
/// no bin exceeds its predecessor and the last bin is at the numerical floor.
fn decays(res: &[f64]) -> (bool, Vec<f64>) {
    let bins: Vec<f64> = (0..(FLIP_T_S as usize))
        .map(|b| res[FLIP_K + 10 * b..FLIP_K + 10 * (b + 1)].iter().sum::<f64>() / 10.0)
        .collect();
    let quiet_before = max_abs(res[..FLIP_K].iter().copied()) < 1e-10;
    let ok = quiet_before
        && bins[0] > 1e-2
        && bins.windows(2).all(|w| w[1] <= w[0] + 1e-12)
        && *bins.last().unwrap() < 1e-10;
    (ok, bins)
}

fn direction_flip() -> Outcome {
    let plant = make_random_stable_lti(2, 33).unwrap();
    let off = offline_excitation(&plant, &[0.0, 0.0], FLIP_T_S, 0.1, 1, 1.0, 2).unwrap();
    let deepc_cfg = DeepcConfig {
        t_s: FLIP_T_S,
        tini_s: 0.3,
        n_s: 0.5,
        q: Weight::Scalar(1.0),
        s: Weight::Scalar(10.0),
        r: Weight::Scalar(0.01),
        lambda_g: 1e-2,
        lambda_sigma: 1e5,
        u_box: Some([-2.0, 2.0]),
        y_box: None,
        order_bound: Some(2),
        pe_check: PeCheck::Strict,
        buffer: BufferMode::Rolling,
        slack_on_future: false,
        tol: 1e-8,
        max_iter: 20_000,
    };
    let mut d = Deepc::new(deepc_cfg, &off.u, &off.y).unwrap();
    let (d_ok, d_bins) = decays(&flip_residuals(&mut d, &plant, off.final_state.clone(), |c| {
        trailing_window_residual(c.buffer(), FLIP_DEPTH)
    }));
    let wkpc_cfg = WkpcConfig {
        t_s: FLIP_T_S,
        u_box: Some([-2.0, 2.0]),
        u_s: 0.0,
        n_p: 6,
        buffer: BufferMode::Rolling,
        ..WkpcConfig::benchmark()
    };
    let mut w = Wkpc::new(wkpc_cfg, &off.u, &off.y, &off.x, 3).unwrap();
    let (w_ok, w_bins) = decays(&flip_residuals(&mut w, &plant, off.final_state.clone(), |c| {
        trailing_window_residual(c.buffer(), FLIP_DEPTH)
    }));

    let pendulum = Pendulum::new(PendulumParams::default()).unwrap();
    let scenario = Scenario {
        direction_flip_time_s: Some(FLIP_K as f64 * 0.1),
        ..Scenario::default()
    };
    let reference = Reference::default();
    let spec = ProbeLoop {
        plant: &pendulum,
        x0: vec![0.0, 0.0],
        steps: 200,
        dt: 0.1,
        substeps: 10,
        scenario: &scenario,
        reference: &reference,
        u_box: None,
    };
    let mut m = Mfapc::new(MfapcConfig::benchmark(), 0.1).unwrap();
    let mut fired = Vec::new();
    run_with_probe(&spec, &mut m, |_, c, _| fired.push(c.estimator().step_direction_guard()));
    let before = fired[..FLIP_K].iter().filter(|&&f| f).count();
    let after = fired[FLIP_K..].iter().filter(|&&f| f).count();
    let persistent_from = fired.iter().rposition(|&f| !f).map_or(0, |k| k + 1);
    let m_ok = before == 0 && persistent_from <= FLIP_K + 20;
    let fmt = |b: &[f64]| format!("{:.1e} -> {:.1e}", b[0], b[b.len() - 1]);
    outcome(
        11,
        "direction-flip study",
        d_ok && w_ok && m_ok,
        format!(
            "DeePC residual {}, WKPC residual {}, MFAPC guard {before} before / {after} after, every step from t = {:.1} s",
            fmt(&d_bins),
            fmt(&w_bins),
            persistent_from as f64 * 0.1
        ),
    )
}

fn main() -> std::process::ExitCode {
    let (bench, det) = benchmark_and_determinism();
    let mut outcomes = vec![
        fundamental_lemma(),
        pe_checker(),
        qp_oracles(),
        deepc_regulation(),
        estimator_convergence(),
        mfapc_regulation(),
        bench,
        integrator(),
        metric_exactness(),
        det,
        direction_flip(),
    ];
    outcomes.sort_by_key(|o| o.id);
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_UNATTAINABLE.contains(&o.id) {
            " (known unattainable)"
        } else {
            ""
        };
        println!("criterion {:>2} {verdict}{note}: {}: {}", o.id, o.name, o.detail);
    }
    let unexpected: Vec<u32> = outcomes
        .iter()
        .filter(|o| !o.pass && !KNOWN_UNATTAINABLE.contains(&o.id))
        .map(|o| o.id)
        .collect();
    if unexpected.is_empty() {
        println!("acceptance: {} criteria, no unexpected failures", outcomes.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {unexpected:?}");
        std::process::ExitCode::FAILURE
    }
}
