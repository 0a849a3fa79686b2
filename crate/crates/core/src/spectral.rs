//! Bath spectral densities and their thermal (coth-weighted) form.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this value of `βω/2` the hyperbolic cotangent is evaluated from
/// its Laurent series instead of `1/tanh`.
pub const COTH_SERIES_THRESHOLD: f64 = 1e-3;

/// Piecewise bath spectral density `J(ω)` with noise strength `η`.
///
/// Both families tend to a finite plateau as `ω → ∞`, which the subtracted
/// dispersion integral relies on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum SpectralModel {
    /// `J = η·ω` below the cutoff `Λ`, `η·Λ` above it.
    #[serde(rename = "ohmic")]
    Ohmic { eta: f64, lambda: f64 },
    /// `J = 0` below the gap `μ`, `η·ω0 = η` above it.
    #[serde(rename = "constant")]
    ConstantGap { eta: f64, mu: f64 },
}

impl SpectralModel {
    pub fn ohmic(eta: f64, lambda: f64) -> Result<Self> {
        let model = SpectralModel::Ohmic { eta, lambda };
        model.validate()?;
        Ok(model)
    }

    pub fn constant_gap(eta: f64, mu: f64) -> Result<Self> {
        let model = SpectralModel::ConstantGap { eta, mu };
        model.validate()?;
        Ok(model)
    }

    /// Checks the parameter invariants. Needed after deserialization,
    /// which bypasses the constructors.
    pub fn validate(&self) -> Result<()> {
        let (eta, name, edge) = match *self {
            SpectralModel::Ohmic { eta, lambda } => (eta, "lambda", lambda),
            SpectralModel::ConstantGap { eta, mu } => (eta, "mu", mu),
        };
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Argument(format!("eta must be positive and finite, got {eta}")));
        }
        if !(edge.is_finite() && edge > 0.0) {
            return Err(Error::Argument(format!("{name} must be positive and finite, got {edge}")));
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        match *self {
            SpectralModel::Ohmic { eta, .. } | SpectralModel::ConstantGap { eta, .. } => eta,
        }
    }

    /// Same family and breakpoint with a different noise strength.
    pub fn with_eta(&self, eta: f64) -> Self {
        match *self {
            SpectralModel::Ohmic { lambda, .. } => SpectralModel::Ohmic { eta, lambda },
            SpectralModel::ConstantGap { mu, .. } => SpectralModel::ConstantGap { eta, mu },
        }
    }

    /// The frequency where the piecewise definition switches branch (`Λ` or `μ`).
    pub fn breakpoint(&self) -> f64 {
        match *self {
            SpectralModel::Ohmic { lambda, .. } => lambda,
            SpectralModel::ConstantGap { mu, .. } => mu,
        }
    }

    /// `lim_{ω→∞} J(ω)`.
    pub fn plateau(&self) -> f64 {
        match *self {
            SpectralModel::Ohmic { eta, lambda } => eta * lambda,
            SpectralModel::ConstantGap { eta, .. } => eta,
        }
    }
}

/// Bath temperature in units of `ω0/k_B`. `T = 0` is the vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    temperature: f64,
}

impl Environment {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::Argument(format!(
                "temperature must be finite and non-negative, got {temperature}"
            )));
        }
        Ok(Environment { temperature })
    }

    pub fn zero() -> Self {
        Environment { temperature: 0.0 }
    }

    /// Builds the environment from the inverse temperature `βω0`.
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Argument(format!("beta must be positive, got {beta}")));
        }
        if beta.is_infinite() {
            return Ok(Self::zero());
        }
        Self::new(1.0 / beta)
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// `βω0`; infinite at zero temperature.
    pub fn beta(&self) -> f64 {
        if self.temperature == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.temperature
        }
    }

    /// `coth(βω/2)`, exactly 1 at zero temperature.
    pub fn coth_half(&self, omega: f64) -> f64 {
        if self.temperature == 0.0 {
            return 1.0;
        }
        coth(omega / (2.0 * self.temperature))
    }

    /// `tanh(βω0/2)`: the equilibrium polarisation, 1 at zero temperature.
    pub fn tanh_half(&self) -> f64 {
        if self.temperature == 0.0 {
            1.0
        } else {
            (0.5 / self.temperature).tanh()
        }
    }
}

/// `coth(x)` for `x > 0`, switching to the Laurent series for small `x`.
pub fn coth(x: f64) -> f64 {
    if x < COTH_SERIES_THRESHOLD {
        x_coth_series(x) / x
    } else {
        1.0 / x.tanh()
    }
}

/// `x·coth(x)` for `x ≥ 0`; finite (→ 1) at the origin.
pub fn x_coth(x: f64) -> f64 {
    if x < COTH_SERIES_THRESHOLD {
        x_coth_series(x)
    } else {
        x / x.tanh()
    }
}

// x·coth(x) = 1 + x²/3 − x⁴/45 + 2x⁶/945 − …
fn x_coth_series(x: f64) -> f64 {
    let x2 = x * x;
    1.0 + x2 * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0)))
}

fn check_frequency(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "spectral density is defined for finite positive frequencies, got {omega}"
        )))
    }
}

/// Zero-temperature spectral density `J(ω)`. Breakpoints take the upper branch.
pub fn eval_j(model: &SpectralModel, omega: f64) -> Result<f64> {
    check_frequency(omega)?;
    Ok(j_unchecked(model, omega))
}

/// Thermal spectral density `J^β(ω) = J(ω)·coth(βω/2)`.
///
/// For the Ohmic branch at small `x = βω/2` this is evaluated as
/// `2Tη·x·coth(x)`, which stays finite as `ω → 0+`.
pub fn eval_j_beta(model: &SpectralModel, env: &Environment, omega: f64) -> Result<f64> {
    check_frequency(omega)?;
    Ok(j_beta_unchecked(model, env, omega))
}

pub(crate) fn j_unchecked(model: &SpectralModel, omega: f64) -> f64 {
    match *model {
        SpectralModel::Ohmic { eta, lambda } => {
            if omega < lambda {
                eta * omega
            } else {
                eta * lambda
            }
        }
        SpectralModel::ConstantGap { eta, mu } => {
            if omega < mu {
                0.0
            } else {
                eta
            }
        }
    }
}

pub(crate) fn j_beta_unchecked(model: &SpectralModel, env: &Environment, omega: f64) -> f64 {
    let t = env.temperature();
    if t == 0.0 {
        return j_unchecked(model, omega);
    }
    match *model {
        SpectralModel::Ohmic { eta, lambda } if omega < lambda => {
            let x = omega / (2.0 * t);
            if x < COTH_SERIES_THRESHOLD {
                2.0 * t * eta * x_coth(x)
            } else {
                // keeps J^β ≥ J exact in floating point
                eta * omega * coth(x)
            }
        }
        _ => j_unchecked(model, omega) * coth(omega / (2.0 * t)),
    }
}
