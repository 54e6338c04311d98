//! Run and comparison configurations (TOML), with the bundled presets.

use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::deepc::DeepcConfig;
use crate::error::{Error, Result};
use crate::harness::Reference;
use crate::koopman::WkpcConfig;
use crate::mfapc::MfapcConfig;
use crate::plants::{make_lti, LtiPlant, Pendulum, PendulumParams, Plant, Scenario, TimeDomain};

/// Bundled presets as `(name, TOML text)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("pendulum_mfapc", include_str!("../presets/pendulum_mfapc.toml")),
    ("pendulum_deepc", include_str!("../presets/pendulum_deepc.toml")),
    ("pendulum_wkpc", include_str!("../presets/pendulum_wkpc.toml")),
    ("paper_benchmark", include_str!("../presets/paper_benchmark.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LtiSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    #[serde(default = "discrete")]
    pub domain: TimeDomain,
}

fn discrete() -> TimeDomain {
    TimeDomain::Discrete
}

fn rows_to_matrix(rows: &[Vec<f64>], key: &str) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::config(key, "must be a non-empty rectangular matrix"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl LtiSpec {
    pub fn build(&self) -> Result<LtiPlant> {
        make_lti(
            rows_to_matrix(&self.a, "plant.a")?,
            rows_to_matrix(&self.b, "plant.b")?,
            rows_to_matrix(&self.c, "plant.c")?,
            self.domain,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PlantModel {
    Pendulum(PendulumParams),
    Lti(LtiSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    #[serde(flatten)]
    pub model: PlantModel,
    /// Initial state; the plant starts at rest (all zeros) when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Actuator limits applied to every input channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_box: Option<[f64; 2]>,
}

fn default_substeps() -> usize {
    10
}

impl PlantSpec {
    pub fn build(&self) -> Result<Box<dyn Plant>> {
        Ok(match &self.model {
            PlantModel::Pendulum(p) => Box::new(Pendulum::new(*p)?),
            PlantModel::Lti(spec) => Box::new(spec.build()?),
        })
    }

    pub fn initial_state(&self, plant: &dyn Plant) -> Result<Vec<f64>> {
        let x0 = self.x0.clone().unwrap_or_else(|| vec![0.0; plant.state_dim()]);
        if x0.len() != plant.state_dim() {
            return Err(Error::config(
                "plant.x0",
                format!("has {} entries, the plant has {} states", x0.len(), plant.state_dim()),
            ));
        }
        Ok(x0)
    }

    /// Factor converting output errors to reported units (degrees for the
    /// pendulum, unchanged otherwise).
    pub fn error_scale(&self) -> f64 {
        match self.model {
            PlantModel::Pendulum(_) => 180.0 / std::f64::consts::PI,
            PlantModel::Lti(_) => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let plant = self.build()?;
        self.initial_state(plant.as_ref())?;
        if self.substeps == 0 {
            return Err(Error::config("plant.substeps", "must be at least 1"));
        }
        if let Some([lo, hi]) = self.u_box {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::config("plant.u_box", format!("empty interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            model: PlantModel::Pendulum(PendulumParams::default()),
            x0: None,
            substeps: default_substeps(),
            u_box: Some([-3.5, 3.5]),
        }
    }
}

/// Offline data collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfflineSpec {
    pub length_s: f64,
    /// Half-width of the uniform random excitation.
    pub amplitude: f64,
    /// Starts the closed loop from the state the offline experiment ended in,
    /// so that the primed data windows describe the actual plant state.
    pub start_from_offline_state: bool,
}

impl Default for OfflineSpec {
    fn default() -> Self {
        Self {
            length_s: 20.0,
            amplitude: 3.0,
            start_from_offline_state: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ControllerSpec {
    Deepc(DeepcConfig),
    Wkpc(WkpcConfig),
    Mfapc(MfapcConfig),
}

impl ControllerSpec {
    pub fn display_name(&self) -> &'static str {
        match self {
            ControllerSpec::Deepc(_) => "DeePC",
            ControllerSpec::Wkpc(_) => "WKPC",
            ControllerSpec::Mfapc(_) => "MFAPC-CFDL",
        }
    }

    /// Offline data length the controller needs, in seconds.
    fn data_seconds(&self) -> f64 {
        match self {
            ControllerSpec::Deepc(c) => c.t_s,
            ControllerSpec::Wkpc(c) => c.t_s,
            ControllerSpec::Mfapc(_) => 0.0,
        }
    }

    /// Validates the block and returns derived quantities as
    /// `(name, value)` pairs.
    pub fn describe(&self, dt: f64, m: usize, p: usize) -> Result<Vec<(&'static str, String)>> {
        Ok(match self {
            ControllerSpec::Deepc(c) => {
                let d = c.dims(dt)?;
                vec![
                    ("T samples", d.t.to_string()),
                    ("Tini samples", d.tini.to_string()),
                    ("N samples", d.n.to_string()),
                    ("L", d.depth().to_string()),
                    ("Hankel size", format!("{} x {}", d.depth() * (m + p), d.g_dim())),
                    ("g-dim", d.g_dim().to_string()),
                    ("required PE order", d.required_pe_order(c.order_bound).to_string()),
                ]
            }
            ControllerSpec::Wkpc(c) => {
                let d = c.dims(dt)?;
                vec![
                    ("T samples", d.t.to_string()),
                    ("Tini samples", d.tini.to_string()),
                    ("N samples", d.n.to_string()),
                    ("L", d.depth().to_string()),
                    ("n_p", c.n_p.to_string()),
                    ("Hankel size", format!("{} x {}", d.depth() * (m + p + c.n_p), d.g_dim())),
                    ("g-dim", d.g_dim().to_string()),
                    ("required PE order", c.required_pe_order(&d).to_string()),
                ]
            }
            ControllerSpec::Mfapc(c) => {
                c.validate()?;
                vec![
                    ("N samples", c.horizon(dt)?.to_string()),
                    ("n_m", c.n_m.to_string()),
                    ("M", format!("{}", c.reset_bound())),
                ]
            }
        })
    }
}

fn default_duration() -> f64 {
    20.0
}

fn default_dt() -> f64 {
    0.1
}

/// Settings shared by single runs and comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Common {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub plant: PlantSpec,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub offline: OfflineSpec,
}

impl Common {
    fn validate(&self, controllers: &[&ControllerSpec]) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "sampling period must be positive"));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(Error::config("duration_s", "must be a finite non-negative duration"));
        }
        let steps = self.duration_s / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * (1.0 + steps) {
            return Err(Error::config("duration_s", "must be a whole number of sampling periods"));
        }
        self.plant.validate()?;
        self.reference.validate()?;
        self.scenario.validate(self.duration_s)?;
        if !(self.offline.amplitude >= 0.0 && self.offline.amplitude.is_finite()) {
            return Err(Error::config("offline.amplitude", "must be a finite non-negative number"));
        }
        if let Some([lo, hi]) = self.plant.u_box {
            if self.offline.amplitude > hi.min(-lo) {
                return Err(Error::config("offline.amplitude", "exceeds the actuator box"));
            }
        }
        let plant = self.plant.build()?;
        let (m, p) = (plant.input_dim(), plant.output_dim());
        for c in controllers {
            c.describe(self.dt, m, p)?;
            if self.offline.length_s + 1e-9 < c.data_seconds() {
                return Err(Error::config(
                    "offline.length_s",
                    format!(
                        "{} s of data is shorter than the {} s {} needs",
                        self.offline.length_s,
                        c.data_seconds(),
                        c.display_name()
                    ),
                ));
            }
            match c {
                ControllerSpec::Deepc(d) => {
                    d.q.to_matrix(p, "deepc.q")?;
                    d.s.to_matrix(p, "deepc.s")?;
                    d.r.to_matrix(m, "deepc.r")?;
                }
                ControllerSpec::Wkpc(w) => {
                    w.q.to_matrix(p, "wkpc.q")?;
                    w.r.to_matrix(m, "wkpc.r")?;
                }
                ControllerSpec::Mfapc(_) => {
                    if m != 1 || p != 1 {
                        return Err(Error::config("controller.type", "MFAPC needs a single-input single-output plant"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub common: Common,
    pub controller: ControllerSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.common.validate(&[&self.controller])
    }
}

/// Controller blocks of a comparison, in table order; any may be omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mfapc: Option<MfapcConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deepc: Option<DeepcConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wkpc: Option<WkpcConfig>,
}

impl ControllerSet {
    pub fn specs(&self) -> Vec<ControllerSpec> {
        let mut out = vec![];
        if let Some(c) = &self.mfapc {
            out.push(ControllerSpec::Mfapc(c.clone()));
        }
        if let Some(c) = &self.deepc {
            out.push(ControllerSpec::Deepc(c.clone()));
        }
        if let Some(c) = &self.wkpc {
            out.push(ControllerSpec::Wkpc(c.clone()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    #[serde(flatten)]
    pub common: Common,
    /// Runs the controllers on separate threads. Off by default so that the
    /// per-step timings are not distorted by contention.
    #[serde(default)]
    pub parallel: bool,
    pub controllers: ControllerSet,
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        let specs = self.controllers.specs();
        if specs.is_empty() {
            return Err(Error::config("controllers", "at least one controller block is required"));
        }
        self.common.validate(&specs.iter().collect::<Vec<_>>())
    }
}

/// A parsed configuration file of either kind.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum AnyConfig {
    Run(RunConfig),
    Compare(CompareConfig),
}

impl AnyConfig {
    pub fn common(&self) -> &Common {
        match self {
            AnyConfig::Run(c) => &c.common,
            AnyConfig::Compare(c) => &c.common,
        }
    }

    pub fn common_mut(&mut self) -> &mut Common {
        match self {
            AnyConfig::Run(c) => &mut c.common,
            AnyConfig::Compare(c) => &mut c.common,
        }
    }

    pub fn specs(&self) -> Vec<ControllerSpec> {
        match self {
            AnyConfig::Run(c) => vec![c.controller.clone()],
            AnyConfig::Compare(c) => c.controllers.specs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AnyConfig::Run(c) => c.validate(),
            AnyConfig::Compare(c) => c.validate(),
        }
    }
}

fn parse_error(e: toml::de::Error) -> Error {
    Error::Parse(e.to_string().trim_end().replace('\n', " "))
}

/// Parses a run or comparison configuration, told apart by the presence of
/// a `[controllers]` table.
pub fn parse_config(text: &str) -> Result<AnyConfig> {
    let table: toml::Table = toml::from_str(text).map_err(parse_error)?;
    if table.contains_key("controllers") {
        Ok(AnyConfig::Compare(toml::from_str(text).map_err(parse_error)?))
    } else if table.contains_key("controller") {
        Ok(AnyConfig::Run(toml::from_str(text).map_err(parse_error)?))
    } else {
        Err(Error::config("controller", "missing a [controller] or [controllers] table"))
    }
}

/// Loads `preset:NAME` or a file path.
pub fn load_config(source: &str) -> Result<AnyConfig> {
    let text = match source.strip_prefix("preset:") {
        Some(name) => preset(name)
            .ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                Error::config("--config", format!("unknown preset `{name}` (available: {})", names.join(", ")))
            })?
            .to_string(),
        None => std::fs::read_to_string(source)?,
    };
    parse_config(&text)
}

pub fn to_toml<T: Serialize>(config: &T) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Parse(e.to_string()))
}
