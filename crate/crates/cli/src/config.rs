//! JSON run configuration.
//!
//! A config file is parsed into [`RawConfig`], where every field is
//! optional, then layered over a named preset if there is one. Values are
//! checked when a command asks for them, so each command only requires the
//! blocks it uses.

use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use qsr_core::dynamics::{BlochState, RelaxationConvention};
use qsr_core::scan::{lin_space, log_space, ModelFamily};
use qsr_core::{Drive, SpectralModel, SpinSystem};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Where in the configuration a problem was found.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into(), line: None, column: None }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() || self.field == "." {
            write!(f, "{}", self.message)?;
        } else {
            write!(f, "{}: {}", self.field, self.message)?;
        }
        if let (Some(line), Some(column)) = (self.line, self.column) {
            write!(f, " (line {line}, column {column})")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// `epsilon` and `delta` in any units (normalised on use), or `delta_ratio = Δ/ω0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub delta_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ohmic,
    Constant,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "type")]
    pub kind: Option<ModelKind>,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentBlock {
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(rename = "T_axis")]
    pub t_axis: Option<Axis>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveBlock {
    pub xi: Option<f64>,
    #[serde(rename = "Omega")]
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub eta_axis: Option<Axis>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub dt: Option<f64>,
    pub tau_end: Option<f64>,
    pub n_periods: Option<usize>,
    pub convention: Option<RelaxationConvention>,
    pub initial: Option<InitialState>,
}

/// Initial Bloch vector; the thermal state is used when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub re_dplus: f64,
    pub im_dplus: f64,
    pub d0: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Either explicit values or `n` points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range(AxisRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn log(start: f64, stop: f64, n: usize) -> Self {
        Axis::Range(AxisRange { start, stop, n, spacing: Spacing::Log })
    }

    pub fn linear(start: f64, stop: f64, n: usize) -> Self {
        Axis::Range(AxisRange { start, stop, n, spacing: Spacing::Linear })
    }

    fn resolve(&self, field: &str) -> Result<Vec<f64>> {
        let values = match self {
            Axis::Values(v) => v.clone(),
            Axis::Range(r) => {
                if r.n == 0 {
                    return Err(ConfigError::new(format!("{field}.n"), "must be at least 1"));
                }
                if !(r.start.is_finite() && r.stop.is_finite()) {
                    return Err(ConfigError::new(field, "start and stop must be finite"));
                }
                match r.spacing {
                    Spacing::Linear => lin_space(r.start, r.stop, r.n),
                    Spacing::Log => {
                        if !(r.start > 0.0 && r.stop > 0.0) {
                            return Err(ConfigError::new(field, "log spacing needs positive start and stop"));
                        }
                        log_space(r.start, r.stop, r.n)
                    }
                }
            }
        };
        if values.is_empty() {
            return Err(ConfigError::new(field, "axis is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::new(field, "axis contains non-finite values"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new(field, "axis must be strictly increasing"));
        }
        Ok(values)
    }
}

/// Parses a config file, reporting the offending field and position.
pub fn parse(text: &str) -> Result<RawConfig> {
    if text.trim().is_empty() {
        return Err(ConfigError::new("", "config is empty"));
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            field,
            message: strip_position(&inner.to_string()),
            line: Some(inner.line()),
            column: Some(inner.column()),
        }
    })?;
    de.end().map_err(|e| ConfigError {
        field: String::new(),
        message: "trailing characters after the config object".into(),
        line: Some(e.line()),
        column: Some(e.column()),
    })?;
    if raw == RawConfig::default() {
        return Err(ConfigError::new("", "config is empty"));
    }
    match raw.schema_version {
        None => return Err(ConfigError::new("schema_version", format!("missing; expected {SCHEMA_VERSION}"))),
        Some(v) if v != SCHEMA_VERSION => {
            return Err(ConfigError::new("schema_version", format!("unsupported version {v}; expected {SCHEMA_VERSION}")))
        }
        _ => {}
    }
    Ok(raw)
}

// serde_json appends " at line L column C"; the position is reported separately
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

/// Field-wise overlay: values present in `over` win.
pub fn merge(base: RawConfig, over: RawConfig) -> RawConfig {
    RawConfig {
        schema_version: over.schema_version.or(base.schema_version),
        preset: over.preset.or(base.preset),
        system: merge_block(base.system, over.system, |b, o| {
            // an explicit pair replaces a ratio and vice versa
            if o.delta_ratio.is_some() {
                SystemBlock { epsilon: o.epsilon, delta: o.delta, delta_ratio: o.delta_ratio }
            } else if o.epsilon.is_some() || o.delta.is_some() {
                SystemBlock { epsilon: o.epsilon.or(b.epsilon), delta: o.delta.or(b.delta), delta_ratio: None }
            } else {
                b
            }
        }),
        model: merge_block(base.model, over.model, |b, o| {
            if o.kind.is_some() && o.kind != b.kind {
                o
            } else {
                ModelBlock {
                    kind: o.kind.or(b.kind),
                    eta: o.eta.or(b.eta),
                    lambda: o.lambda.or(b.lambda),
                    mu: o.mu.or(b.mu),
                }
            }
        }),
        environment: merge_block(base.environment, over.environment, |b, o| EnvironmentBlock {
            t: o.t.or(b.t),
            t_axis: o.t_axis.or(b.t_axis),
        }),
        drive: merge_block(base.drive, over.drive, |b, o| DriveBlock {
            xi: o.xi.or(b.xi),
            omega: o.omega.or(b.omega),
        }),
        scan: merge_block(base.scan, over.scan, |b, o| ScanBlock { eta_axis: o.eta_axis.or(b.eta_axis) }),
        simulate: merge_block(base.simulate, over.simulate, |b, o| SimulateBlock {
            dt: o.dt.or(b.dt),
            tau_end: o.tau_end.or(b.tau_end),
            n_periods: o.n_periods.or(b.n_periods),
            convention: o.convention.or(b.convention),
            initial: o.initial.or(b.initial),
        }),
        output: merge_block(base.output, over.output, |b, o| OutputBlock {
            directory: o.directory.or(b.directory),
            format: o.format.or(b.format),
        }),
        tol: over.tol.or(base.tol),
    }
}

fn merge_block<T>(base: Option<T>, over: Option<T>, f: impl FnOnce(T, T) -> T) -> Option<T> {
    match (base, over) {
        (Some(b), Some(o)) => Some(f(b, o)),
        (b, o) => o.or(b),
    }
}

fn core_error(field: &str, e: qsr_core::Error) -> ConfigError {
    let message = match e {
        qsr_core::Error::Argument(m) | qsr_core::Error::Domain(m) => m,
        other => other.to_string(),
    };
    ConfigError::new(field, message)
}

fn require<T: Clone>(value: &Option<T>, field: &str) -> Result<T> {
    value.clone().ok_or_else(|| ConfigError::new(field, "missing"))
}

/// Typed accessors over a merged config.
impl RawConfig {
    pub fn spin_system(&self) -> Result<SpinSystem> {
        let block = self.system.as_ref().ok_or_else(|| ConfigError::new("system", "missing"))?;
        match (block.delta_ratio, block.epsilon, block.delta) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(ConfigError::new(
                "system",
                "give either delta_ratio or the pair (epsilon, delta), not both",
            )),
            (Some(r), None, None) => SpinSystem::from_delta(r).map_err(|e| core_error("system.delta_ratio", e)),
            (None, Some(eps), Some(delta)) => SpinSystem::new(eps, delta, false).map_err(|e| core_error("system", e)),
            (None, Some(_), None) => Err(ConfigError::new("system.delta", "missing")),
            (None, None, _) => Err(ConfigError::new("system", "needs delta_ratio or (epsilon, delta)")),
        }
    }

    pub fn family(&self) -> Result<ModelFamily> {
        let block = self.model.as_ref().ok_or_else(|| ConfigError::new("model", "missing"))?;
        let kind = require(&block.kind, "model.type")?;
        let family = match kind {
            ModelKind::Ohmic => {
                if block.mu.is_some() {
                    return Err(ConfigError::new("model.mu", "not a parameter of the ohmic model"));
                }
                ModelFamily::Ohmic { lambda: require(&block.lambda, "model.lambda")? }
            }
            ModelKind::Constant => {
                if block.lambda.is_some() {
                    return Err(ConfigError::new("model.lambda", "not a parameter of the constant model"));
                }
                ModelFamily::ConstantGap { mu: require(&block.mu, "model.mu")? }
            }
        };
        Ok(family)
    }

    pub fn spectral_model(&self) -> Result<SpectralModel> {
        let family = self.family()?;
        let eta = require(&self.model.as_ref().and_then(|m| m.eta), "model.eta")?;
        family.with_eta(eta).map_err(|e| core_error("model", e))
    }

    pub fn temperature(&self) -> Result<f64> {
        let t = require(&self.environment.as_ref().and_then(|e| e.t), "environment.T")?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(ConfigError::new("environment.T", format!("must be finite and >= 0, got {t}")));
        }
        Ok(t)
    }

    pub fn t_axis(&self) -> Result<Vec<f64>> {
        let axis = require(&self.environment.as_ref().and_then(|e| e.t_axis.clone()), "environment.T_axis")?;
        let values = axis.resolve("environment.T_axis")?;
        if values.iter().any(|&t| t < 0.0) {
            return Err(ConfigError::new("environment.T_axis", "temperatures must be >= 0"));
        }
        Ok(values)
    }

    pub fn eta_axis(&self) -> Result<Vec<f64>> {
        let axis = require(&self.scan.as_ref().and_then(|s| s.eta_axis.clone()), "scan.eta_axis")?;
        let values = axis.resolve("scan.eta_axis")?;
        if values.iter().any(|&e| e <= 0.0) {
            return Err(ConfigError::new("scan.eta_axis", "noise strengths must be positive"));
        }
        Ok(values)
    }

    pub fn drive_frequency(&self) -> Result<f64> {
        let omega = require(&self.drive.as_ref().and_then(|d| d.omega), "drive.Omega")?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(ConfigError::new("drive.Omega", format!("must be positive, got {omega}")));
        }
        Ok(omega)
    }

    pub fn drive(&self) -> Result<Drive> {
        let omega = self.drive_frequency()?;
        let xi = require(&self.drive.as_ref().and_then(|d| d.xi), "drive.xi")?;
        Drive::new(xi, omega).map_err(|e| core_error("drive.xi", e))
    }

    pub fn tolerance(&self) -> Result<f64> {
        let tol = self.tol.unwrap_or(qsr_core::dispersion::DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ConfigError::new("tol", format!("must be positive, got {tol}")));
        }
        Ok(tol)
    }

    pub fn simulate_block(&self) -> SimulateBlock {
        self.simulate.clone().unwrap_or_default()
    }

    pub fn initial_state(&self) -> Result<Option<BlochState>> {
        match self.simulate.as_ref().and_then(|s| s.initial) {
            None => Ok(None),
            Some(s) => BlochState::new(Complex64::new(s.re_dplus, s.im_dplus), s.d0)
                .map(Some)
                .map_err(|e| core_error("simulate.initial", e)),
        }
    }

    pub fn output_directory(&self) -> Option<PathBuf> {
        self.output.as_ref().and_then(|o| o.directory.clone())
    }

    pub fn output_format(&self) -> OutputFormat {
        self.output.as_ref().and_then(|o| o.format).unwrap_or_default()
    }
}
