//! SNR maps over noise strength and temperature, and classification of the
//! temperature dependence of each row.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{kinetic_coefficients, SpinSystem};
use crate::format::full_precision;
use crate::response::snr;
use crate::spectral::{Environment, SpectralModel};
use crate::{Error, Result};

/// Smallest number of samples `classify_curve` accepts.
pub const MIN_CURVE_SAMPLES: usize = 30;
/// Peaks below this fraction of `max R` in prominence are ignored.
pub const PROMINENCE_FRACTION: f64 = 1e-3;
/// An anti-resonance dip must fall below this fraction of `max R`.
pub const DIP_FRACTION: f64 = 1e-2;
/// Half-width (in grid steps) of the neighbourhood searched for the dip.
pub const DIP_NEIGHBOURHOOD: usize = 2;
/// Golden-section refinement stops once the bracket is narrower than this.
pub const PEAK_RESOLUTION: f64 = 1e-4;

/// Spectral family with its breakpoint; `η` comes from the scan axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ModelFamily {
    #[serde(rename = "ohmic")]
    Ohmic { lambda: f64 },
    #[serde(rename = "constant")]
    ConstantGap { mu: f64 },
}

impl ModelFamily {
    pub fn with_eta(&self, eta: f64) -> Result<SpectralModel> {
        match *self {
            ModelFamily::Ohmic { lambda } => SpectralModel::ohmic(eta, lambda),
            ModelFamily::ConstantGap { mu } => SpectralModel::constant_gap(eta, mu),
        }
    }
}

impl From<SpectralModel> for ModelFamily {
    fn from(model: SpectralModel) -> Self {
        match model {
            SpectralModel::Ohmic { lambda, .. } => ModelFamily::Ohmic { lambda },
            SpectralModel::ConstantGap { mu, .. } => ModelFamily::ConstantGap { mu },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub family: ModelFamily,
    pub eta_axis: Vec<f64>,
    pub t_axis: Vec<f64>,
    pub sys: SpinSystem,
    pub omega: f64,
    pub tol: f64,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        check_axis("eta", &self.eta_axis)?;
        check_axis("T", &self.t_axis)?;
        if self.eta_axis.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Argument("all eta values must be positive".into()));
        }
        if self.t_axis.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::Argument("all temperatures must be >= 0".into()));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Argument(format!("drive frequency must be positive, got {}", self.omega)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Argument(format!("tolerance must be positive, got {}", self.tol)));
        }
        self.family.with_eta(self.eta_axis[0])?;
        Ok(())
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::Argument(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("{name} axis contains non-finite values")));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

/// `n` points from `start` to `stop` (inclusive), evenly spaced in `ln`.
pub fn log_space(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), stop.ln());
    (0..n)
        .map(|k| match k {
            0 => start,
            k if k == n - 1 => stop,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `n` evenly spaced points from `start` to `stop` (inclusive).
pub fn lin_space(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|k| if k == n - 1 { stop } else { start + (stop - start) * k as f64 / (n - 1) as f64 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResonanceKind {
    NoResonance,
    SingleResonance,
    AntiResonance,
    DoubleResonance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub kind: ResonanceKind,
    pub peak_temperatures: Vec<f64>,
    pub dip_temperature: Option<f64>,
    #[serde(rename = "omega_R_zero_crossing")]
    pub omega_r_zero_crossing: Option<f64>,
}

/// One grid cell. Failed cells hold NaN in every field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub snr: f64,
    pub omega_r: f64,
    pub gamma_beta: f64,
    pub sigma_beta: f64,
}

impl Cell {
    pub const MISSING: Cell = Cell { snr: f64::NAN, omega_r: f64::NAN, gamma_beta: f64::NAN, sigma_beta: f64::NAN };

    pub fn is_missing(&self) -> bool {
        self.snr.is_nan()
    }
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub spec: ScanSpec,
    /// Row-major: `cells[i * t_axis.len() + j]` is `(η_i, T_j)`.
    cells: Vec<Cell>,
    pub classifications: Vec<std::result::Result<ResonanceReport, Error>>,
}

impl ScanResult {
    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[i * self.spec.t_axis.len() + j]
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        let n = self.spec.t_axis.len();
        &self.cells[i * n..(i + 1) * n]
    }

    pub fn snr_grid(&self) -> Vec<Vec<f64>> {
        (0..self.spec.eta_axis.len()).map(|i| self.row(i).iter().map(|c| c.snr).collect()).collect()
    }

    pub fn omega_r_grid(&self) -> Vec<Vec<f64>> {
        (0..self.spec.eta_axis.len()).map(|i| self.row(i).iter().map(|c| c.omega_r).collect()).collect()
    }

    pub fn missing_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    /// CSV `eta,T,snr,omega_R,gamma_beta,sigma_beta`, one line per cell, row-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eta", "T", "snr", "omega_R", "gamma_beta", "sigma_beta"])?;
        for (i, &eta) in self.spec.eta_axis.iter().enumerate() {
            for (j, &t) in self.spec.t_axis.iter().enumerate() {
                let c = self.cell(i, j);
                w.write_record([
                    full_precision(eta),
                    full_precision(t),
                    full_precision(c.snr),
                    full_precision(c.omega_r),
                    full_precision(c.gamma_beta),
                    full_precision(c.sigma_beta),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates one `(η, T)` cell.
pub fn evaluate_cell(sys: &SpinSystem, model: &SpectralModel, t: f64, omega: f64, tol: f64) -> Result<Cell> {
    let env = Environment::new(t)?;
    let k = kinetic_coefficients(sys, model, &env, tol)?;
    Ok(Cell {
        snr: snr(&k, sys, &env, omega)?,
        omega_r: k.omega_r_beta,
        gamma_beta: k.gamma_beta,
        sigma_beta: k.sigma_beta,
    })
}

/// Fills the `(η, T)` grid in parallel on the current rayon pool.
///
/// Cells whose evaluation fails are stored as [`Cell::MISSING`]; the
/// output order does not depend on scheduling.
pub fn scan_snr(spec: &ScanSpec) -> Result<ScanResult> {
    spec.validate()?;
    let n_t = spec.t_axis.len();
    let models = spec
        .eta_axis
        .iter()
        .map(|&eta| spec.family.with_eta(eta))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<Cell> = (0..spec.eta_axis.len() * n_t)
        .into_par_iter()
        .map(|idx| {
            let model = &models[idx / n_t];
            let t = spec.t_axis[idx % n_t];
            evaluate_cell(&spec.sys, model, t, spec.omega, spec.tol).unwrap_or(Cell::MISSING)
        })
        .collect();

    let classifications = (0..spec.eta_axis.len())
        .map(|i| {
            let row = &cells[i * n_t..(i + 1) * n_t];
            let kept: Vec<(f64, &Cell)> = spec.t_axis.iter().copied().zip(row).filter(|(_, c)| !c.is_missing()).collect();
            let ts: Vec<f64> = kept.iter().map(|(t, _)| *t).collect();
            let rs: Vec<f64> = kept.iter().map(|(_, c)| c.snr).collect();
            let ws: Vec<f64> = kept.iter().map(|(_, c)| c.omega_r).collect();
            classify_curve(&ts, &rs, &ws)
        })
        .collect();
    Ok(ScanResult { spec: spec.clone(), cells, classifications })
}

/// Interior local maximum with its topographic prominence.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Peak {
    index: usize,
    prominence: f64,
}

fn smooth3(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                values[i]
            } else {
                (values[i - 1] + values[i] + values[i + 1]) / 3.0
            }
        })
        .collect()
}

fn interior_peaks(values: &[f64]) -> Vec<Peak> {
    let n = values.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            // walk across a plateau of equal values
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                let index = (i + j) / 2;
                peaks.push(Peak { index, prominence: prominence(values, index) });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Height above the higher of the two lowest points separating the peak
/// from higher ground (or from the curve's ends).
fn prominence(values: &[f64], index: usize) -> f64 {
    let h = values[index];
    let mut left_min = h;
    for &v in values[..index].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &values[index + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Classifies an `R(T)` curve.
///
/// Peaks are interior local maxima of the 3-point moving average with
/// prominence at least `1e-3·max R`. An anti-resonance needs an `ω_R^β`
/// sign change together with `R < 1e-2·max R` within two grid steps of it;
/// the candidates include `R` interpolated to the crossing itself.
/// More than two peaks without a dip are reduced to the two most prominent.
pub fn classify_curve(t_axis: &[f64], r_values: &[f64], omega_r_values: &[f64]) -> Result<ResonanceReport> {
    if t_axis.len() != r_values.len() || t_axis.len() != omega_r_values.len() {
        return Err(Error::Argument("curve columns must have equal lengths".into()));
    }
    if t_axis.len() < MIN_CURVE_SAMPLES {
        return Err(Error::Argument(format!(
            "need at least {MIN_CURVE_SAMPLES} samples, got {}",
            t_axis.len()
        )));
    }
    if t_axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("temperature axis must be strictly increasing".into()));
    }
    if r_values.iter().any(|r| !(*r >= 0.0) || r.is_infinite()) {
        return Err(Error::Argument("SNR values must be finite and non-negative".into()));
    }

    let r_max = r_values.iter().copied().fold(0.0, f64::max);
    let smoothed = smooth3(r_values);
    let mut peaks: Vec<Peak> = interior_peaks(&smoothed)
        .into_iter()
        .filter(|p| p.prominence >= PROMINENCE_FRACTION * r_max)
        .collect();

    let mut crossing = None;
    let mut dip = None;
    for k in 0..t_axis.len() - 1 {
        let (w0, w1) = (omega_r_values[k], omega_r_values[k + 1]);
        if w0 == 0.0 || w0.signum() != w1.signum() {
            let t_zero = if w0 == w1 {
                t_axis[k]
            } else {
                t_axis[k] + (t_axis[k + 1] - t_axis[k]) * w0 / (w0 - w1)
            };
            // R carries the sign of ω_R, so sign(ω_R)·R is smooth through the
            // crossing and its interpolant estimates R there independently of
            // how close the nearest sample happens to be
            let signed = |j: usize| omega_r_values[j].signum() * r_values[j];
            let frac = if w0 == w1 { 0.0 } else { w0 / (w0 - w1) };
            let r_cross = (signed(k) + (signed(k + 1) - signed(k)) * frac).abs();
            let lo = k.saturating_sub(DIP_NEIGHBOURHOOD);
            let hi = (k + 1 + DIP_NEIGHBOURHOOD).min(t_axis.len() - 1);
            let (t_min, r_min) = (lo..=hi)
                .map(|j| (t_axis[j], r_values[j]))
                .chain(std::iter::once((t_zero, r_cross)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty neighbourhood");
            crossing.get_or_insert(t_zero);
            if r_min < DIP_FRACTION * r_max {
                crossing = Some(t_zero);
                dip = Some(t_min);
                break;
            }
        }
    }

    if dip.is_none() && peaks.len() > 2 {
        peaks.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
        peaks.truncate(2);
        peaks.sort_by_key(|p| p.index);
    }
    let peak_temperatures: Vec<f64> = peaks.iter().map(|p| t_axis[p.index]).collect();
    let kind = match (dip.is_some(), peak_temperatures.len()) {
        (true, _) => ResonanceKind::AntiResonance,
        (false, 0) => ResonanceKind::NoResonance,
        (false, 1) => ResonanceKind::SingleResonance,
        (false, _) => ResonanceKind::DoubleResonance,
    };
    Ok(ResonanceReport { kind, peak_temperatures, dip_temperature: dip, omega_r_zero_crossing: crossing })
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// Returns `(x, f(x))` once the bracket is narrower than `resolution`.
/// Fails with [`Error::Bracket`] when the maximum sits on an end point.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, resolution: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(Error::Argument(format!("empty bracket [{lo}, {hi}]")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > resolution {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    if x - lo <= resolution || hi - x <= resolution {
        return Err(Error::Bracket(format!(
            "maximum on [{lo}, {hi}] lies at the edge (x = {x}); no interior peak"
        )));
    }
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo > fx || f_hi > fx {
        return Err(Error::Bracket(format!("bracket [{lo}, {hi}] does not enclose a maximum")));
    }
    Ok((x, fx))
}

/// Refines an SNR peak in temperature on `[t_lo, t_hi]` to `ΔT ≤ 1e-4`.
pub fn find_peak(
    sys: &SpinSystem,
    model: &SpectralModel,
    omega: f64,
    t_lo: f64,
    t_hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(t_lo >= 0.0) {
        return Err(Error::Argument(format!("temperatures must be >= 0, got {t_lo}")));
    }
    golden_section_max(|t| Ok(evaluate_cell(sys, model, t, omega, tol)?.snr), t_lo, t_hi, PEAK_RESOLUTION)
}
