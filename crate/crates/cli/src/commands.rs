//! Subcommand implementations. Each command returns its artifacts as bytes;
//! writing them out is left to the caller.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use qsr_core::dispersion::kinetic_coefficients;
use qsr_core::dynamics::{extract_harmonic_response, integrate_driven_with, max_step, relax_closed_form, RelaxationConvention};
use qsr_core::format::full_precision;
use qsr_core::response::{amplitude, phase_delay, response_point};
use qsr_core::scan::{scan_snr, ResonanceReport};
use qsr_core::{BlochState, Environment, KineticCoefficients, ScanSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, OutputFormat, RawConfig};
use crate::CliError;

/// Drive periods fitted by `simulate` unless configured otherwise.
pub const DEFAULT_FIT_PERIODS: usize = 5;
/// Relaxation times allowed for transients before the fit window.
pub const SETTLING_TIMES: f64 = 8.0;

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: &str, bytes: Vec<u8>) -> Self {
        Artifact { name: name.to_string(), bytes }
    }
}

/// Artifacts plus anything worth telling the user on stderr.
#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    pub notes: Vec<String>,
    /// Cells that failed numerically; the artifacts hold NaN in their place.
    pub failed: usize,
    pub total: usize,
}

/// Writes artifacts into `dir`, or concatenated to stdout when there is none.
pub fn emit(dir: Option<&Path>, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            artifacts
                .iter()
                .map(|a| {
                    let path = dir.join(&a.name);
                    std::fs::write(&path, &a.bytes)?;
                    Ok(path)
                })
                .collect()
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for a in artifacts {
                lock.write_all(&a.bytes)?;
            }
            lock.flush()?;
            Ok(Vec::new())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serialisable record");
    bytes.push(b'\n');
    bytes
}

pub fn coefficients(cfg: &RawConfig) -> Result<KineticCoefficients, CliError> {
    let sys = cfg.spin_system()?;
    let model = cfg.spectral_model()?;
    let env = Environment::new(cfg.temperature()?).map_err(|e| ConfigError::new("environment.T", e.to_string()))?;
    Ok(kinetic_coefficients(&sys, &model, &env, cfg.tolerance()?)?)
}

pub fn cmd_coeffs(cfg: &RawConfig) -> Result<CommandOutput, CliError> {
    let k = coefficients(cfg)?;
    Ok(CommandOutput { artifacts: vec![Artifact::new("coeffs.json", to_json(&k))], total: 1, ..Default::default() })
}

/// One row of an SNR-versus-temperature curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "R")]
    pub snr: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub phi: f64,
    #[serde(rename = "omega_R")]
    pub omega_r: f64,
}

impl CurveRow {
    fn missing(t: f64) -> Self {
        CurveRow { t, snr: f64::NAN, amplitude: f64::NAN, phi: f64::NAN, omega_r: f64::NAN }
    }
}

/// Per-temperature results, in axis order.
pub type CurveEvaluation = Vec<(f64, Result<CurveRow, qsr_core::Error>)>;

/// Evaluates the curve; failed temperatures come back as `Err` in place.
pub fn snr_curve(cfg: &RawConfig) -> Result<CurveEvaluation, CliError> {
    let sys = cfg.spin_system()?;
    let model = cfg.spectral_model()?;
    let t_axis = cfg.t_axis()?;
    let omega = cfg.drive_frequency()?;
    let tol = cfg.tolerance()?;
    Ok(t_axis
        .par_iter()
        .map(|&t| {
            let row = Environment::new(t).and_then(|env| {
                let k = kinetic_coefficients(&sys, &model, &env, tol)?;
                let p = response_point(&k, &sys, &env, omega)?;
                Ok(CurveRow { t, snr: p.snr, amplitude: p.amplitude, phi: p.phase, omega_r: k.omega_r_beta })
            });
            (t, row)
        })
        .collect())
}

pub fn cmd_snr_curve(cfg: &RawConfig) -> Result<CommandOutput, CliError> {
    let evaluated = snr_curve(cfg)?;
    let mut notes = Vec::new();
    let rows: Vec<CurveRow> = evaluated
        .into_iter()
        .map(|(t, r)| {
            r.unwrap_or_else(|e| {
                notes.push(format!("T = {t}: {e}"));
                CurveRow::missing(t)
            })
        })
        .collect();
    let artifact = match cfg.output_format() {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["T", "R", "A", "phi", "omega_R"]).map_err(qsr_core::Error::from)?;
            for r in &rows {
                w.write_record([r.t, r.snr, r.amplitude, r.phi, r.omega_r].map(full_precision))
                    .map_err(qsr_core::Error::from)?;
            }
            Artifact::new("snr_curve.csv", w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
        }
        OutputFormat::Json => Artifact::new("snr_curve.json", to_json(&json_rows(&rows))),
    };
    Ok(CommandOutput { artifacts: vec![artifact], failed: notes.len(), notes, total: rows.len() })
}

// JSON has no NaN; missing values become null
fn json_rows(rows: &[CurveRow]) -> Vec<serde_json::Value> {
    let num = |x: f64| if x.is_nan() { serde_json::Value::Null } else { serde_json::json!(x) };
    rows.iter()
        .map(|r| {
            serde_json::json!({
                "T": num(r.t), "R": num(r.snr), "A": num(r.amplitude), "phi": num(r.phi), "omega_R": num(r.omega_r)
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct RowClassification {
    eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<ResonanceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn scan_spec(cfg: &RawConfig) -> Result<ScanSpec, CliError> {
    let spec = ScanSpec {
        family: cfg.family()?,
        eta_axis: cfg.eta_axis()?,
        t_axis: cfg.t_axis()?,
        sys: cfg.spin_system()?,
        omega: cfg.drive_frequency()?,
        tol: cfg.tolerance()?,
    };
    spec.validate().map_err(|e| ConfigError::new("scan", e.to_string()))?;
    Ok(spec)
}

pub fn cmd_scan(cfg: &RawConfig) -> Result<CommandOutput, CliError> {
    let spec = scan_spec(cfg)?;
    let result = scan_snr(&spec)?;
    let grid = match cfg.output_format() {
        OutputFormat::Csv => {
            let mut bytes = Vec::new();
            result.write_csv(&mut bytes)?;
            Artifact::new("scan.csv", bytes)
        }
        OutputFormat::Json => {
            let num = |x: f64| if x.is_nan() { serde_json::Value::Null } else { serde_json::json!(x) };
            let mut cells = Vec::new();
            for (i, &eta) in spec.eta_axis.iter().enumerate() {
                for (j, &t) in spec.t_axis.iter().enumerate() {
                    let c = result.cell(i, j);
                    cells.push(serde_json::json!({
                        "eta": eta, "T": t, "snr": num(c.snr), "omega_R": num(c.omega_r),
                        "gamma_beta": num(c.gamma_beta), "sigma_beta": num(c.sigma_beta)
                    }));
                }
            }
            Artifact::new("scan.json", to_json(&cells))
        }
    };
    let classes: Vec<RowClassification> = spec
        .eta_axis
        .iter()
        .zip(&result.classifications)
        .map(|(&eta, c)| match c {
            Ok(report) => RowClassification { eta, classification: Some(report.clone()), error: None },
            Err(e) => RowClassification { eta, classification: None, error: Some(e.to_string()) },
        })
        .collect();
    let failed = result.missing_cells();
    let mut notes = Vec::new();
    if failed > 0 {
        notes.push(format!("{failed} cells failed and are written as nan"));
    }
    Ok(CommandOutput {
        artifacts: vec![grid, Artifact::new("classifications.json", to_json(&classes))],
        notes,
        failed,
        total: spec.eta_axis.len() * spec.t_axis.len(),
    })
}

/// Comparison record appended to the trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    #[serde(rename = "T")]
    pub t: f64,
    pub xi: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub dt: f64,
    pub tau_end: f64,
    pub convention: RelaxationConvention,
    pub coefficients: KineticCoefficients,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation_max_deviation: Option<f64>,
    pub perturbative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResponseComparison {
    pub n_periods: usize,
    /// Fitted amplitude divided by `ξ`.
    pub amplitude_fit: f64,
    /// `|A|` from the closed form.
    pub amplitude_closed: f64,
    pub amplitude_rel_error: f64,
    pub phase_fit: f64,
    pub phase_closed: f64,
    /// Difference of the two phases, folded into `[-π/2, π/2)`.
    pub phase_error: f64,
    pub fit_residual: f64,
}

/// Default RK4 step: within the drive bound and resolving the fastest decay or rotation.
pub fn default_step(k: &KineticCoefficients, omega: f64) -> f64 {
    let rate = k.omega_r_beta.hypot(k.gamma_beta).max(2.0 * k.gamma_beta);
    if rate > 0.0 {
        max_step(omega).min(0.01 / rate)
    } else {
        max_step(omega)
    }
}

pub fn simulate(cfg: &RawConfig) -> Result<(qsr_core::Trajectory, SimulationSummary), CliError> {
    let sys = cfg.spin_system()?;
    let model = cfg.spectral_model()?;
    let t = cfg.temperature()?;
    let drive = cfg.drive()?;
    let env = Environment::new(t)?;
    let k = kinetic_coefficients(&sys, &model, &env, cfg.tolerance()?)?;
    let block = cfg.simulate_block();
    let n_periods = block.n_periods.unwrap_or(DEFAULT_FIT_PERIODS);
    let convention = block.convention.unwrap_or_default();
    let period = 2.0 * PI / drive.omega;
    let dt = block.dt.unwrap_or_else(|| default_step(&k, drive.omega));
    let tau_end = match block.tau_end {
        Some(tau) => tau,
        None if k.gamma_beta > 0.0 => SETTLING_TIMES / k.gamma_beta + n_periods as f64 * period,
        None => return Err(ConfigError::new("simulate.tau_end", "required when gamma_beta = 0").into()),
    };
    let state0 = cfg.initial_state()?.unwrap_or_else(|| BlochState::thermal(&env));
    let traj = integrate_driven_with(&state0, &k, &sys, &drive, tau_end, dt, convention)?;

    let (response, relaxation_max_deviation) = if drive.xi == 0.0 {
        let mut worst = 0.0f64;
        for (tau, s) in traj.times().iter().zip(traj.states()) {
            worst = worst.max(s.distance(&relax_closed_form(&state0, &k, *tau)?));
        }
        (None, Some(worst))
    } else {
        let fit = extract_harmonic_response(&traj, drive.omega, n_periods)?;
        let a = amplitude(&k, &sys, &env, drive.omega)?.abs();
        let phi = phase_delay(&k, drive.omega)?;
        let fitted = fit.amplitude / drive.xi;
        let phase_error = (fit.phase - phi + PI / 2.0).rem_euclid(PI) - PI / 2.0;
        let comparison = ResponseComparison {
            n_periods,
            amplitude_fit: fitted,
            amplitude_closed: a,
            amplitude_rel_error: if a > 0.0 { (fitted - a).abs() / a } else { f64::NAN },
            phase_fit: fit.phase,
            phase_closed: phi,
            phase_error,
            fit_residual: fit.residual,
        };
        (Some(comparison), None)
    };
    let advisory = (!drive.is_perturbative()).then(|| {
        format!(
            "xi = {} exceeds {}: second-order effects may be visible and the closed forms are only indicative",
            drive.xi,
            qsr_core::response::PERTURBATIVE_LIMIT
        )
    });
    let summary = SimulationSummary {
        t,
        xi: drive.xi,
        omega: drive.omega,
        dt,
        tau_end,
        convention,
        coefficients: k,
        response,
        relaxation_max_deviation,
        perturbative: drive.is_perturbative(),
        advisory,
    };
    Ok((traj, summary))
}

pub fn cmd_simulate(cfg: &RawConfig) -> Result<CommandOutput, CliError> {
    if cfg.output_format() == OutputFormat::Json {
        return Err(ConfigError::new("output.format", "simulate writes CSV only").into());
    }
    let (traj, summary) = simulate(cfg)?;
    let mut bytes = Vec::new();
    traj.write_csv(&mut bytes)?;
    bytes.extend_from_slice(b"# ");
    bytes.extend_from_slice(&serde_json::to_vec(&summary).expect("serialisable record"));
    bytes.push(b'\n');
    let notes = summary.advisory.iter().cloned().collect();
    Ok(CommandOutput { artifacts: vec![Artifact::new("trajectory.csv", bytes)], notes, total: 1, failed: 0 })
}
