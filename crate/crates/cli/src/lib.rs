//! Command implementations behind the `ddpc` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ddpc_core::config::{load_config, AnyConfig, CompareConfig, RunConfig};
use ddpc_core::experiment::{run_comparison, run_experiment};
use ddpc_core::harness::{
    comparison_csv, comparison_table, plot_csvs, write_run_outputs, RunResult, METRIC_LABELS,
};
use ddpc_core::io::write_atomic;
use ddpc_core::{Error, Result};

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

fn load(source: &str, ov: &Overrides) -> Result<AnyConfig> {
    let mut cfg = load_config(source)?;
    if let Some(seed) = ov.seed {
        cfg.common_mut().seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.common_mut().output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn output_dir(cfg: &AnyConfig, fallback: &str) -> PathBuf {
    cfg.common()
        .output_dir
        .clone()
        .unwrap_or_else(|| Path::new("out").join(fallback))
}

fn slug(name: &str) -> String {
    name.to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

pub fn metrics_report(res: &RunResult) -> String {
    let mut out = format!("{} ({} samples)\n", res.controller, res.len());
    for (key, label, unit) in METRIC_LABELS {
        let v = res.metrics.get(key).unwrap_or(f64::NAN);
        let _ = writeln!(out, "  {label:<24} {v:.4e} {unit}");
    }
    let _ = writeln!(out, "  {:<24} {:.4e} deg·s", "AIE (dt-weighted)", res.metrics.aie_dt);
    if res.clamp_count() > 0 {
        let _ = writeln!(out, "  input clamped on {} steps", res.clamp_count());
    }
    out
}

/// Executes a single run and writes `run.csv`, `diagnostics.csv` and
/// `metrics.toml`.
pub fn cmd_run(source: &str, ov: &Overrides) -> Result<RunResult> {
    let cfg = load(source, ov)?;
    let run: RunConfig = match &cfg {
        AnyConfig::Run(r) => r.clone(),
        AnyConfig::Compare(_) => {
            return Err(Error::Config {
                key: "controllers".into(),
                msg: "this is a comparison config; use `compare`".into(),
            })
        }
    };
    let dir = output_dir(&cfg, &slug(run.controller.display_name()));
    let res = run_experiment(&run)?;
    write_run_outputs(&dir, &res)?;
    if !ov.quiet {
        print!("{}", metrics_report(&res));
        println!("outputs written to {}", dir.display());
    }
    if let Some(reason) = &res.abort {
        return Err(Error::Degenerate(format!("run aborted: {reason}")));
    }
    Ok(res)
}

/// Result of a comparison: one entry per controller in table order.
pub struct Comparison {
    pub runs: Vec<(&'static str, Result<RunResult>)>,
    pub table: String,
    pub dir: PathBuf,
}

impl Comparison {
    pub fn failures(&self) -> Vec<String> {
        self.runs
            .iter()
            .filter_map(|(name, r)| match r {
                Err(e) => Some(format!("{name}: {e}")),
                Ok(res) => res.abort.as_ref().map(|a| format!("{name}: {a}")),
            })
            .collect()
    }
}

/// Runs every controller block on identical data and writes per-run
/// outputs, `comparison.txt`, `comparison.csv` and the plot data files.
pub fn cmd_compare(source: &str, ov: &Overrides) -> Result<Comparison> {
    let cfg = load(source, ov)?;
    let compare: CompareConfig = match &cfg {
        AnyConfig::Compare(c) => c.clone(),
        AnyConfig::Run(_) => {
            return Err(Error::Config {
                key: "controller".into(),
                msg: "this is a single-run config; use `run`".into(),
            })
        }
    };
    let dir = output_dir(&cfg, "compare");
    let runs = run_comparison(&compare)?;
    std::fs::create_dir_all(&dir)?;
    for (name, r) in &runs {
        if let Ok(res) = r {
            write_run_outputs(&dir.join(slug(name)), res)?;
        }
    }
    let columns: Vec<_> = runs
        .iter()
        .map(|(name, r)| (*name, r.as_ref().ok().filter(|res| !res.is_empty()).map(|res| &res.metrics)))
        .collect();
    let table = comparison_table(&columns);
    write_atomic(&dir.join("comparison.txt"), table.as_bytes())?;
    write_atomic(&dir.join("comparison.csv"), comparison_csv(&columns).as_bytes())?;
    let finished: Vec<&RunResult> = runs.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    for (file, text) in plot_csvs(&finished) {
        write_atomic(&dir.join(file), text.as_bytes())?;
    }
    let cmp = Comparison { runs, table, dir };
    if !ov.quiet {
        print!("{}", cmp.table);
        println!("outputs written to {}", cmp.dir.display());
    }
    let failures = cmp.failures();
    if !failures.is_empty() {
        return Err(Error::Degenerate(format!("failed runs: {}", failures.join("; "))));
    }
    Ok(cmp)
}

/// Checks a configuration without simulating and reports derived sizes.
pub fn cmd_validate(source: &str) -> Result<String> {
    let cfg = load_config(source)?;
    cfg.validate()?;
    let common = cfg.common();
    let plant = common.plant.build()?;
    let (m, p) = (plant.input_dim(), plant.output_dim());
    let mut out = String::new();
    let steps = (common.duration_s / common.dt).round() as usize;
    let _ = writeln!(out, "configuration is valid");
    let _ = writeln!(out, "samples: {steps} at dt = {} s", common.dt);
    let _ = writeln!(
        out,
        "offline data: {} samples",
        (common.offline.length_s / common.dt).round() as usize
    );
    for spec in cfg.specs() {
        let _ = writeln!(out, "{}:", spec.display_name());
        for (k, v) in spec.describe(common.dt, m, p)? {
            let _ = writeln!(out, "  {k} = {v}");
        }
    }
    Ok(out)
}
