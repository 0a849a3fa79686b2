//! Kinetic coefficients of the stochastic-limit dynamics.
//!
//! The damping rates follow directly from the spectral density on shell,
//! `γ = Δ²·J(1)` and `γ^β = Δ²·J^β(1)`. The frequency shift is the
//! principal-value integral
//!
//! ```text
//! σ^β = ε²·(2/π)·PV ∫₀^∞ J^β(ω′) / (ω′² − 1) dω′
//! ```
//!
//! evaluated by splitting the half-line at the model breakpoint and at the
//! pole, folding the pole neighbourhood into the regular symmetric-pair
//! integrand `f(1+u) + f(1−u)`, and closing the plateau tail analytically.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate_segments, Segment};
use crate::spectral::{j_beta_unchecked, j_unchecked, Environment, SpectralModel};
use crate::{Error, Result};

/// Default absolute tolerance on `σ^β`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Baseline truncation point of the dispersion integral, in units of `ω0`.
pub const OMEGA_MAX: f64 = 1e3;

/// Panel budget for one dispersion integral.
pub const MAX_PANELS: usize = 4000;

/// Two-level system with bias `ε` and tunnelling `Δ`, normalised so that
/// `ω0 = √(ε² + Δ²) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    epsilon: f64,
    delta: f64,
}

impl SpinSystem {
    /// With `strict`, `(ε, Δ)` must already satisfy `ε² + Δ² = 1` (to 1e-9);
    /// otherwise both are divided by `√(ε² + Δ²)`.
    pub fn new(epsilon: f64, delta: f64, strict: bool) -> Result<Self> {
        if !(epsilon.is_finite() && delta.is_finite()) {
            return Err(Error::Argument("epsilon and delta must be finite".into()));
        }
        if delta < 0.0 {
            return Err(Error::Argument(format!("delta must be non-negative, got {delta}")));
        }
        let omega0 = epsilon.hypot(delta);
        if omega0 == 0.0 {
            return Err(Error::Argument("epsilon and delta cannot both vanish".into()));
        }
        if strict {
            if (omega0 * omega0 - 1.0).abs() > 1e-9 {
                return Err(Error::Argument(format!(
                    "epsilon^2 + delta^2 = {} but must equal 1 in units of omega0",
                    omega0 * omega0
                )));
            }
            Ok(SpinSystem { epsilon, delta })
        } else {
            Ok(SpinSystem { epsilon: epsilon / omega0, delta: delta / omega0 })
        }
    }

    /// System with `Δ/ω0 = delta` and non-negative bias `ε = √(1 − Δ²)`.
    pub fn from_delta(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Argument(format!("delta/omega0 must lie in [0, 1], got {delta}")));
        }
        Ok(SpinSystem { epsilon: (1.0 - delta * delta).sqrt(), delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Mixing angle `θ` with `tan θ = Δ/ε`.
    pub fn mixing_angle(&self) -> f64 {
        self.delta.atan2(self.epsilon)
    }
}

/// A value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Damping and shift at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticCoefficients {
    pub gamma: f64,
    pub gamma_beta: f64,
    pub sigma_beta: f64,
    #[serde(rename = "omega_R_beta")]
    pub omega_r_beta: f64,
    pub quad_error: f64,
}

pub fn gamma_zero_t(sys: &SpinSystem, model: &SpectralModel) -> f64 {
    sys.delta * sys.delta * j_unchecked(model, 1.0)
}

pub fn gamma_beta(sys: &SpinSystem, model: &SpectralModel, env: &Environment) -> f64 {
    sys.delta * sys.delta * j_beta_unchecked(model, env, 1.0)
}

/// Lamb shift `σ^β` to absolute tolerance `tol`.
pub fn sigma_beta(sys: &SpinSystem, model: &SpectralModel, env: &Environment, tol: f64) -> Result<Estimate> {
    shift_with_subtraction(sys, model, env, None, tol)
}

/// `σ^β` computed from the dispersion relation subtracted at `omega1`.
///
/// Subtracting `J^β(ω1)` changes the integrand and the tail constant but
/// not the result, because `PV ∫₀^∞ dω′/(ω′² − 1) = 0`. At `omega1 = 0` the
/// subtracted constant is the low-frequency limit `J^β(0+)`. This route
/// exists to cross-check the quadrature.
pub fn sigma_beta_subtracted(
    sys: &SpinSystem,
    model: &SpectralModel,
    env: &Environment,
    omega1: f64,
    tol: f64,
) -> Result<Estimate> {
    if !(omega1 >= 0.0 && omega1.is_finite()) {
        return Err(Error::Argument(format!("subtraction point must be finite and >= 0, got {omega1}")));
    }
    shift_with_subtraction(sys, model, env, Some(omega1), tol)
}

pub fn kinetic_coefficients(
    sys: &SpinSystem,
    model: &SpectralModel,
    env: &Environment,
    tol: f64,
) -> Result<KineticCoefficients> {
    let sigma = sigma_beta(sys, model, env, tol)?;
    Ok(KineticCoefficients {
        gamma: gamma_zero_t(sys, model),
        gamma_beta: gamma_beta(sys, model, env),
        sigma_beta: sigma.value,
        omega_r_beta: 1.0 - sigma.value,
        quad_error: sigma.error,
    })
}

/// Truncation point: at least `OMEGA_MAX`, far beyond the breakpoint, and
/// with `β·ω_max > 60` so that `coth` equals 1 on the tail to double precision.
fn truncation_point(model: &SpectralModel, env: &Environment) -> f64 {
    OMEGA_MAX
        .max(61.0 * env.temperature())
        .max(10.0 * model.breakpoint())
}

fn shift_with_subtraction(
    sys: &SpinSystem,
    model: &SpectralModel,
    env: &Environment,
    omega1: Option<f64>,
    tol: f64,
) -> Result<Estimate> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    model.validate()?;
    let prefactor = sys.epsilon * sys.epsilon * 2.0 / PI;
    if prefactor == 0.0 {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let pv = principal_value(model, env, omega1, tol / prefactor)?;
    Ok(Estimate { value: prefactor * pv.value, error: prefactor * pv.error })
}

/// `PV ∫₀^∞ (J^β(ω) − c)/(ω² − 1) dω` with `c = J^β(ω1)` (or 0).
fn principal_value(model: &SpectralModel, env: &Environment, omega1: Option<f64>, tol: f64) -> Result<Estimate> {
    let edge = model.breakpoint();
    if matches!(model, SpectralModel::ConstantGap { .. }) && edge == 1.0 {
        return Err(Error::Domain(
            "a spectral gap edge exactly on shell makes the principal value diverge".into(),
        ));
    }
    let c = match omega1 {
        None => 0.0,
        Some(0.0) => match *model {
            SpectralModel::Ohmic { eta, .. } => 2.0 * eta * env.temperature(),
            SpectralModel::ConstantGap { .. } => 0.0,
        },
        Some(w) => j_beta_unchecked(model, env, w),
    };

    let numerator = |w: f64| j_beta_unchecked(model, env, w) - c;
    let plain = |w: f64| numerator(w) / ((w - 1.0) * (w + 1.0));
    // f(1+u) + f(1−u), with the odd pole cancelled between the two terms
    let paired = |u: f64| (numerator(1.0 + u) / (2.0 + u) - numerator(1.0 - u) / (2.0 - u)) / u;

    let half_width = if edge == 1.0 { 0.5 } else { 0.5f64.min(0.5 * (edge - 1.0).abs()) };
    let omega_max = truncation_point(model, env);

    let mut below = vec![0.0];
    let mut above = vec![1.0 + half_width];
    if edge < 1.0 - half_width {
        below.push(edge);
    } else if edge > 1.0 + half_width {
        above.push(edge);
    }
    below.push(1.0 - half_width);
    let mut decade = 10.0;
    while decade < omega_max {
        if decade > 1.0 + half_width {
            above.push(decade);
        }
        decade *= 10.0;
    }
    above.push(omega_max);
    above.sort_by(f64::total_cmp);
    above.dedup();

    let mut segments: Vec<Segment<'_>> = Vec::new();
    for pair in below.windows(2) {
        segments.push(Segment::new(pair[0], pair[1], &plain));
    }
    segments.push(Segment::new(0.0, half_width, &paired));
    for pair in above.windows(2) {
        segments.push(Segment::new(pair[0], pair[1], &plain));
    }

    let quad = integrate_segments(&segments, tol, MAX_PANELS)?;
    let tail_constant = model.plateau() - c;
    let tail = 0.5 * tail_constant * (2.0 / (omega_max - 1.0)).ln_1p();
    Ok(Estimate { value: quad.value + tail, error: quad.abs_error })
}
