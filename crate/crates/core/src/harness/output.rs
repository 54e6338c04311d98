use std::fmt::Write as _;
use std::path::Path;

use super::{Metrics, RunResult, METRIC_LABELS};
use crate::controller::Diag;
use crate::error::Result;
use crate::io::write_atomic;

/// Columns (and metric keys) that carry wall-clock measurements.
pub const TIMING_COLUMNS: &[&str] = &["solve_time", "solve_time_s", "compute_time_s", "mean_opt_time_s"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn channel_names(base: &str, channels: usize) -> Vec<String> {
    if channels == 1 {
        vec![base.to_string()]
    } else {
        (0..channels).map(|c| format!("{base}{c}")).collect()
    }
}

/// Per-step log: `t, r, u_requested, u_applied, y, e, solve_time`.
pub fn run_csv(res: &RunResult) -> String {
    let p = res.y.channels();
    let m = res.u.channels();
    let mut header = vec!["t".to_string()];
    header.extend(channel_names("r", p));
    header.extend(channel_names("u_requested", m));
    header.extend(channel_names("u_applied", m));
    header.extend(channel_names("y", p));
    header.extend(channel_names("e", p));
    header.push("solve_time".into());
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..res.len() {
        let mut row = vec![num(k as f64 * res.dt)];
        row.extend(res.r.sample(k).iter().map(|&v| num(v)));
        row.extend(res.u_requested.sample(k).iter().map(|&v| num(v)));
        row.extend(res.u.sample(k).iter().map(|&v| num(v)));
        row.extend(res.y.sample(k).iter().map(|&v| num(v)));
        row.extend(res.r.sample(k).iter().zip(res.y.sample(k)).map(|(r, y)| num(r - y)));
        row.push(num(res.solve_time[k]));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn diagnostics_csv(res: &RunResult) -> String {
    let mut out = res.diagnostics.columns.join(",");
    out.push('\n');
    for row in &res.diagnostics.rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, d)| match d {
                Diag::Num(v) if i == 0 => format!("{v}"),
                Diag::Num(v) => num(*v),
                Diag::Flag(b) => u8::from(*b).to_string(),
                Diag::Text(s) => (*s).to_string(),
                Diag::Time => String::new(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Key-value metrics record with labels and units.
pub fn metrics_toml(res: &RunResult) -> String {
    let mut t = toml::Table::new();
    t.insert("controller".into(), res.controller.clone().into());
    t.insert("seed".into(), toml::Value::Integer(res.seeds.seed as i64));
    t.insert("samples".into(), toml::Value::Integer(res.len() as i64));
    t.insert(
        "min_abs_error_window".into(),
        "final 25% of samples (steady-state proxy)".into(),
    );
    t.insert("clamped_steps".into(), toml::Value::Integer(res.clamp_count() as i64));
    if let Some(reason) = &res.abort {
        t.insert("aborted".into(), reason.clone().into());
    }
    let mut entry = |key: &str, label: &str, unit: &str| {
        let mut e = toml::Table::new();
        e.insert("label".into(), label.into());
        e.insert("unit".into(), unit.into());
        e.insert("value".into(), res.metrics.get(key).unwrap_or(f64::NAN).into());
        t.insert(key.into(), e.into());
    };
    for (key, label, unit) in METRIC_LABELS {
        entry(key, label, unit);
    }
    entry("aie_dt", "Absolute integral error (dt-weighted)", "deg·s");
    toml::to_string(&t).expect("metrics table serializes")
}

/// Writes `run.csv`, `diagnostics.csv` and `metrics.toml` into `dir`.
pub fn write_run_outputs(dir: &Path, res: &RunResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("run.csv"), run_csv(res).as_bytes())?;
    write_atomic(&dir.join("diagnostics.csv"), diagnostics_csv(res).as_bytes())?;
    write_atomic(&dir.join("metrics.toml"), metrics_toml(res).as_bytes())?;
    Ok(())
}

/// One column of a comparison: a controller name and its metrics, or `None`
/// when the run failed.
pub type Column<'a> = (&'a str, Option<&'a Metrics>);

/// Plain-text table with one row per metric and one column per controller.
pub fn comparison_table(columns: &[Column<'_>]) -> String {
    let mut cells: Vec<Vec<String>> = vec![];
    let mut header = vec!["Metric".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.to_string()));
    cells.push(header);
    for (key, label, unit) in METRIC_LABELS {
        let mut row = vec![format!("{label} [{unit}]")];
        row.extend(columns.iter().map(|(_, m)| match m {
            Some(m) => format!("{:.4e}", m.get(key).unwrap_or(f64::NAN)),
            None => "failed".into(),
        }));
        cells.push(row);
    }
    let widths: Vec<usize> = (0..cells[0].len())
        .map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| {
                if c == 0 {
                    format!("{s:<w$}")
                } else {
                    format!("{s:>w$}")
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

pub fn comparison_csv(columns: &[Column<'_>]) -> String {
    let mut out = String::from("metric,label,unit");
    for (name, _) in columns {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for (key, label, unit) in METRIC_LABELS.iter().copied().chain([("aie_dt", "Absolute integral error (dt-weighted)", "deg·s")]) {
        let _ = write!(out, "{key},{label},{unit}");
        for (_, m) in columns {
            match m {
                Some(m) => {
                    let _ = write!(out, ",{}", num(m.get(key).unwrap_or(f64::NAN)));
                }
                None => out.push_str(",failed"),
            }
        }
        out.push('\n');
    }
    out
}

fn slug(name: &str) -> String {
    name.to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// The data behind response, input and input-increment plots:
/// `(file name, contents)` for each.
pub fn plot_csvs(results: &[&RunResult]) -> Vec<(&'static str, String)> {
    let len = results.iter().map(|r| r.len()).max().unwrap_or(0);
    let dt = results.first().map_or(0.0, |r| r.dt);
    let reference = results.iter().find(|r| r.len() == len);
    let cell = |v: Option<f64>| v.map(num).unwrap_or_default();

    let mut response = String::from("t,r");
    let mut input = String::from("t");
    let mut du = String::from("t");
    for r in results {
        let s = slug(&r.controller);
        let _ = write!(response, ",y_{s}");
        let _ = write!(input, ",u_{s}");
        let _ = write!(du, ",du_{s}");
    }
    for text in [&mut response, &mut input, &mut du] {
        text.push('\n');
    }
    for k in 0..len {
        let t = num(k as f64 * dt);
        let _ = write!(response, "{t},{}", cell(reference.map(|r| r.r.sample(k)[0])));
        let _ = write!(input, "{t}");
        let _ = write!(du, "{t}");
        for r in results {
            let have = k < r.len();
            let _ = write!(response, ",{}", cell(have.then(|| r.y.sample(k)[0])));
            let _ = write!(input, ",{}", cell(have.then(|| r.u.sample(k)[0])));
            let prev = if k == 0 { 0.0 } else { r.u.sample(k - 1)[0] };
            let _ = write!(du, ",{}", cell(have.then(|| r.u.sample(k)[0] - prev)));
        }
        for text in [&mut response, &mut input, &mut du] {
            text.push('\n');
        }
    }
    vec![
        ("plot_response.csv", response),
        ("plot_input.csv", input),
        ("plot_du.csv", du),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_marks_failures() {
        let m = Metrics {
            abs_integral_error_deg: 12.5,
            ..Metrics::default()
        };
        let t = comparison_table(&[("MFAPC-CFDL", Some(&m)), ("DeePC", None)]);
        assert!(t.contains("Absolute integral error"));
        assert!(t.contains("1.2500e1"));
        assert!(t.contains("failed"));
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn csv_columns_follow_order() {
        let m = Metrics::default();
        let c = comparison_csv(&[("MFAPC-CFDL", Some(&m)), ("DeePC", Some(&m)), ("WKPC", Some(&m))]);
        assert!(c.starts_with("metric,label,unit,MFAPC-CFDL,DeePC,WKPC\n"));
        assert_eq!(c.lines().count(), 6);
    }
}
