//! Time evolution of `⟨D+⟩` and `⟨D0⟩` in rescaled time.
//!
//! The undriven relaxation has a closed form. The driven equations
//!
//! ```text
//! d⟨D±⟩/dτ = −(γ^β ∓ iω_R^β)⟨D±⟩ ± 2iξ(ε⟨D±⟩ + Δ/2·⟨D0⟩)·sin Ωτ
//! d⟨D0⟩/dτ = −2γ^β⟨D0⟩ − 2γ + 2iξΔ(⟨D+⟩ − ⟨D−⟩)·sin Ωτ
//! ```
//!
//! are integrated with fixed-step classical RK4. Only `⟨D+⟩` and the real
//! `⟨D0⟩` are evolved; `⟨D−⟩` is always the conjugate of `⟨D+⟩`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{KineticCoefficients, SpinSystem};
use crate::format::full_precision;
use crate::response::Drive;
use crate::spectral::Environment;
use crate::{Error, Result};

/// Slack allowed on `|⟨D0⟩| ≤ 1` during integration.
pub const POPULATION_SLACK: f64 = 1e-6;

/// Expectation values `⟨D+⟩` (complex) and `⟨D0⟩` (real).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub d_plus: Complex64,
    pub d0: f64,
}

impl BlochState {
    /// Rejects states that do not come from a density matrix:
    /// `|d0| ≤ 1` and `|d+|² ≤ (1 − d0²)/4`.
    pub fn new(d_plus: Complex64, d0: f64) -> Result<Self> {
        if !(d0.is_finite() && d_plus.re.is_finite() && d_plus.im.is_finite()) {
            return Err(Error::Argument("state components must be finite".into()));
        }
        if d0.abs() > 1.0 {
            return Err(Error::Argument(format!("population difference d0 = {d0} outside [-1, 1]")));
        }
        let bound = 0.25 * (1.0 - d0 * d0);
        if d_plus.norm_sqr() > bound * (1.0 + 1e-12) {
            return Err(Error::Argument(format!(
                "|d+|^2 = {} exceeds the positivity bound (1 - d0^2)/4 = {bound}",
                d_plus.norm_sqr()
            )));
        }
        Ok(BlochState { d_plus, d0 })
    }

    /// The equilibrium state `(0, −tanh(β/2))`.
    pub fn thermal(env: &Environment) -> Self {
        BlochState { d_plus: Complex64::new(0.0, 0.0), d0: -env.tanh_half() }
    }

    pub fn d_minus(&self) -> Complex64 {
        self.d_plus.conj()
    }

    /// Populations `(⟨+|ρ|+⟩, ⟨−|ρ|−⟩) = ((1 + d0)/2, (1 − d0)/2)`.
    pub fn populations(&self) -> (f64, f64) {
        (0.5 * (1.0 + self.d0), 0.5 * (1.0 - self.d0))
    }

    /// `X = ε·⟨D0⟩ − Δ·(⟨D+⟩ + ⟨D−⟩)`.
    pub fn position(&self, sys: &SpinSystem) -> f64 {
        sys.epsilon() * self.d0 - 2.0 * sys.delta() * self.d_plus.re
    }

    /// Euclidean distance in `(Re d+, Im d+, d0)`.
    pub fn distance(&self, other: &BlochState) -> f64 {
        ((self.d_plus - other.d_plus).norm_sqr() + (self.d0 - other.d0).powi(2)).sqrt()
    }
}

/// Relaxation law used for `⟨D0⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationConvention {
    /// `−2γ^β d0 − 2γ`: the rate that reproduces the closed-form relaxation.
    #[default]
    Consistent,
    /// `−γ^β d0 − γ`: the driven equation as printed, kept for comparison
    /// runs. Same fixed point, half the population relaxation rate.
    Literal,
}

impl RelaxationConvention {
    fn factor(self) -> f64 {
        match self {
            RelaxationConvention::Consistent => 2.0,
            RelaxationConvention::Literal => 1.0,
        }
    }
}

/// Sampled solution: one state and one `X` value per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<BlochState>,
    x_values: Vec<f64>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<BlochState>, x_values: Vec<f64>) -> Result<Self> {
        if times.len() != states.len() || times.len() != x_values.len() {
            return Err(Error::Argument("trajectory columns must have equal lengths".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("trajectory times must be strictly increasing".into()));
        }
        Ok(Trajectory { times, states, x_values })
    }

    /// Builds a trajectory from raw `X(τ)` samples (states left at zero).
    pub fn from_samples(times: Vec<f64>, x_values: Vec<f64>) -> Result<Self> {
        let states = vec![BlochState { d_plus: Complex64::new(0.0, 0.0), d0: 0.0 }; times.len()];
        Self::new(times, states, x_values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[BlochState] {
        &self.states
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `tau,re_dplus,im_dplus,d0,x`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "re_dplus", "im_dplus", "d0", "x"])?;
        for ((t, s), x) in self.times.iter().zip(&self.states).zip(&self.x_values) {
            w.write_record([
                full_precision(*t),
                full_precision(s.d_plus.re),
                full_precision(s.d_plus.im),
                full_precision(s.d0),
                full_precision(*x),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Closed-form undriven evolution from `state0` to time `tau`.
///
/// With `γ^β = 0` the coherence rotates freely and `d0` is frozen.
pub fn relax_closed_form(
    state0: &BlochState,
    coeffs: &KineticCoefficients,
    tau: f64,
) -> Result<BlochState> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Argument(format!("tau must be finite and >= 0, got {tau}")));
    }
    let g = coeffs.gamma_beta;
    let rotation = Complex64::new(-g, coeffs.omega_r_beta) * tau;
    let d_plus = state0.d_plus * rotation.exp();
    if g == 0.0 {
        return Ok(BlochState { d_plus, d0: state0.d0 });
    }
    let fixed = coeffs.gamma / g;
    let d0 = (state0.d0 + fixed) * (-2.0 * g * tau).exp() - fixed;
    Ok(BlochState { d_plus, d0 })
}

/// Largest admissible RK4 step for drive frequency `omega`.
pub fn max_step(omega: f64) -> f64 {
    0.05 / omega.max(1.0)
}

#[derive(Clone, Copy)]
struct Rhs {
    gamma: f64,
    gamma_beta: f64,
    omega_r: f64,
    epsilon: f64,
    delta: f64,
    xi: f64,
    omega: f64,
    relax: f64,
}

impl Rhs {
    fn eval(&self, tau: f64, dp: Complex64, d0: f64) -> (Complex64, f64) {
        let s = self.xi * (self.omega * tau).sin();
        let i = Complex64::i();
        let ddp = -Complex64::new(self.gamma_beta, -self.omega_r) * dp
            + 2.0 * i * s * (self.epsilon * dp + 0.5 * self.delta * d0);
        // 2iξΔ(d+ − d−) = 2iξΔ·2i·Im d+ = −4ξΔ·Im d+
        let dd0 = -self.relax * (self.gamma_beta * d0 + self.gamma) - 4.0 * s * self.delta * dp.im;
        (ddp, dd0)
    }

    fn step(&self, tau: f64, dt: f64, dp: Complex64, d0: f64) -> (Complex64, f64) {
        let h = 0.5 * dt;
        let (k1p, k10) = self.eval(tau, dp, d0);
        let (k2p, k20) = self.eval(tau + h, dp + k1p * h, d0 + k10 * h);
        let (k3p, k30) = self.eval(tau + h, dp + k2p * h, d0 + k20 * h);
        let (k4p, k40) = self.eval(tau + dt, dp + k3p * dt, d0 + k30 * dt);
        (
            dp + (k1p + 2.0 * k2p + 2.0 * k3p + k4p) * (dt / 6.0),
            d0 + (k10 + 2.0 * k20 + 2.0 * k30 + k40) * (dt / 6.0),
        )
    }
}

/// Integrates the driven equations on `[0, tau_end]` with the default
/// relaxation convention.
pub fn integrate_driven(
    state0: &BlochState,
    coeffs: &KineticCoefficients,
    sys: &SpinSystem,
    drive: &Drive,
    tau_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_driven_with(state0, coeffs, sys, drive, tau_end, dt, RelaxationConvention::default())
}

/// As [`integrate_driven`], choosing the `⟨D0⟩` relaxation law.
///
/// The step is shrunk to `tau_end / ceil(tau_end / dt)` so the grid ends
/// exactly at `tau_end`; every step is recorded.
pub fn integrate_driven_with(
    state0: &BlochState,
    coeffs: &KineticCoefficients,
    sys: &SpinSystem,
    drive: &Drive,
    tau_end: f64,
    dt: f64,
    convention: RelaxationConvention,
) -> Result<Trajectory> {
    drive.validate()?;
    if !(tau_end > 0.0 && tau_end.is_finite()) {
        return Err(Error::Argument(format!("tau_end must be positive, got {tau_end}")));
    }
    let bound = max_step(drive.omega);
    if !(dt > 0.0 && dt <= bound) {
        return Err(Error::Argument(format!(
            "step dt = {dt} must lie in (0, {bound}] for drive frequency {}",
            drive.omega
        )));
    }
    let steps = (tau_end / dt).ceil() as usize;
    let h = tau_end / steps as f64;
    let rhs = Rhs {
        gamma: coeffs.gamma,
        gamma_beta: coeffs.gamma_beta,
        omega_r: coeffs.omega_r_beta,
        epsilon: sys.epsilon(),
        delta: sys.delta(),
        xi: drive.xi,
        omega: drive.omega,
        relax: convention.factor(),
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x_values = Vec::with_capacity(steps + 1);
    let (mut dp, mut d0) = (state0.d_plus, state0.d0);
    for k in 0..=steps {
        let tau = k as f64 * h;
        if !(d0.abs() <= 1.0 + POPULATION_SLACK && dp.re.is_finite() && dp.im.is_finite()) {
            return Err(Error::Stability {
                tau,
                reason: format!("d0 = {d0} left [-1, 1]; reduce dt or the drive amplitude"),
            });
        }
        let state = BlochState { d_plus: dp, d0 };
        times.push(tau);
        x_values.push(state.position(sys));
        states.push(state);
        if k < steps {
            (dp, d0) = rhs.step(tau, h, dp, d0);
        }
    }
    Ok(Trajectory { times, states, x_values })
}

/// Least-squares fit `x ≈ offset + A·sin(Ωτ − φ)` over a trailing window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    /// Raw (un-normalised) amplitude; divide by `ξ` to compare with `A`.
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub residual: f64,
}

/// Fits `c0 + cs·sin Ωτ + cc·cos Ωτ` over the last `n_periods` drive periods.
pub fn extract_harmonic_response(traj: &Trajectory, omega: f64, n_periods: usize) -> Result<HarmonicFit> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Argument(format!("drive frequency must be positive, got {omega}")));
    }
    if n_periods < 3 {
        return Err(Error::Argument(format!("need at least 3 periods, got {n_periods}")));
    }
    let (Some(&first), Some(&last)) = (traj.times.first(), traj.times.last()) else {
        return Err(Error::Argument("empty trajectory".into()));
    };
    let window = n_periods as f64 * 2.0 * PI / omega;
    let start = last - window;
    if start < first - 1e-9 * window {
        return Err(Error::Argument(format!(
            "trajectory spans {} but {n_periods} periods need {window}",
            last - first
        )));
    }
    if omega * (last - start.max(first)) < 2.0 * PI {
        return Err(Error::Conditioning("fit window shorter than one drive period".into()));
    }

    let samples: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.x_values)
        .filter(|(t, _)| **t >= start)
        .map(|(t, x)| (*t, *x))
        .collect();
    if samples.len() < 3 {
        return Err(Error::Conditioning(format!("only {} samples in the fit window", samples.len())));
    }

    // normal equations for the basis (1, sin, cos), with times centred on the window
    let centre = 0.5 * (start + last);
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    let basis = |t: f64| {
        let (s, c) = (omega * (t - centre)).sin_cos();
        [1.0, s, c]
    };
    for &(t, x) in &samples {
        let b = basis(t);
        for r in 0..3 {
            rhs[r] += b[r] * x;
            for c in 0..3 {
                m[r][c] += b[r] * b[c];
            }
        }
    }
    let coef = solve_symmetric_3(m, rhs)?;

    // rotate the centred phase back to τ = 0
    let (c0, a_s, a_c) = (coef[0], coef[1], coef[2]);
    let amplitude = a_s.hypot(a_c);
    let centred_phase = (-a_c).atan2(a_s);
    let phase = (centred_phase + omega * centre).rem_euclid(PI);

    let ssr: f64 = samples
        .iter()
        .map(|&(t, x)| {
            let b = basis(t);
            let fit = c0 + a_s * b[1] + a_c * b[2];
            (x - fit).powi(2)
        })
        .sum();
    Ok(HarmonicFit { amplitude, phase, offset: c0, residual: (ssr / samples.len() as f64).sqrt() })
}

fn solve_symmetric_3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    let scale = m[0][0].abs().max(m[1][1].abs()).max(m[2][2].abs());
    for k in 0..3 {
        let pivot = (k..3)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap_or(k);
        if m[pivot][k].abs() <= 1e-12 * scale {
            return Err(Error::Conditioning("normal equations are numerically singular".into()));
        }
        m.swap(k, pivot);
        b.swap(k, pivot);
        for i in (k + 1)..3 {
            let f = m[i][k] / m[k][k];
            let row_k = m[k];
            for (mij, mkj) in m[i][k..].iter_mut().zip(&row_k[k..]) {
                *mij -= f * mkj;
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let tail: f64 = ((k + 1)..3).map(|j| m[k][j] * x[j]).sum();
        x[k] = (b[k] - tail) / m[k][k];
    }
    Ok(x)
}
