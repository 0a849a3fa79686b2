//! Stationary linear response to the weak drive `ξ·X·sin(Ωτ)`.
//!
//! After the transients decay (`τ ≫ 1/γ^β`) the position expectation
//! oscillates about its thermal value with amplitude `ξ·|A|` and phase lag
//! `φ` (defined modulo π), to first order in `ξ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{KineticCoefficients, SpinSystem};
use crate::spectral::Environment;
use crate::{Error, Result};

/// Drive strength above which the first-order response is only advisory.
pub const PERTURBATIVE_LIMIT: f64 = 0.05;

/// Periodic drive `ξ·X·sin(Ωτ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub xi: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
}

impl Drive {
    pub fn new(xi: f64, omega: f64) -> Result<Self> {
        let drive = Drive { xi, omega };
        drive.validate()?;
        Ok(drive)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::Argument(format!("drive amplitude xi must be >= 0, got {}", self.xi)));
        }
        check_frequency(self.omega)
    }

    /// False when `ξ` is large enough that `O(ξ²)` corrections may matter.
    pub fn is_perturbative(&self) -> bool {
        self.xi <= PERTURBATIVE_LIMIT
    }
}

/// Response coefficients at one drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    /// Signed amplitude; negative when `ω_R^β < 0`.
    pub amplitude: f64,
    pub phase: f64,
    pub snr: f64,
    pub x_eq: f64,
}

fn check_frequency(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("drive frequency must be positive, got {omega}")))
    }
}

fn detuning(coeffs: &KineticCoefficients, omega: f64) -> f64 {
    let w = coeffs.omega_r_beta;
    let g = coeffs.gamma_beta;
    w * w - omega * omega + g * g
}

/// `A = 2Δ²·ω_R^β·tanh(β/2) / √[((ω_R^β)² − Ω² + (γ^β)²)² + (2γ^β Ω)²]`.
pub fn amplitude(coeffs: &KineticCoefficients, sys: &SpinSystem, env: &Environment, omega: f64) -> Result<f64> {
    check_frequency(omega)?;
    let d = detuning(coeffs, omega);
    let damping = 2.0 * coeffs.gamma_beta * omega;
    let denominator = d.hypot(damping);
    let numerator = 2.0 * sys.delta() * sys.delta() * coeffs.omega_r_beta * env.tanh_half();
    if numerator == 0.0 {
        return Ok(0.0);
    }
    if denominator == 0.0 {
        return Err(Error::SingularModel(
            "undamped drive exactly on the renormalised resonance".into(),
        ));
    }
    Ok(numerator / denominator)
}

/// Phase lag `φ ∈ [0, π)` with `tan φ = 2γ^β Ω / ((ω_R^β)² − Ω² + (γ^β)²)`.
pub fn phase_delay(coeffs: &KineticCoefficients, omega: f64) -> Result<f64> {
    check_frequency(omega)?;
    let phi = (2.0 * coeffs.gamma_beta * omega).atan2(detuning(coeffs, omega));
    Ok(phi.rem_euclid(PI))
}

/// `R = |A| / γ^β`.
pub fn snr(coeffs: &KineticCoefficients, sys: &SpinSystem, env: &Environment, omega: f64) -> Result<f64> {
    if !(coeffs.gamma_beta > 0.0) {
        return Err(Error::SingularModel(
            "gamma_beta = 0: the system is decoupled from the bath and the SNR is undefined".into(),
        ));
    }
    Ok(amplitude(coeffs, sys, env, omega)?.abs() / coeffs.gamma_beta)
}

pub fn response_point(
    coeffs: &KineticCoefficients,
    sys: &SpinSystem,
    env: &Environment,
    omega: f64,
) -> Result<ResponsePoint> {
    Ok(ResponsePoint {
        amplitude: amplitude(coeffs, sys, env, omega)?,
        phase: phase_delay(coeffs, omega)?,
        snr: snr(coeffs, sys, env, omega)?,
        x_eq: -sys.epsilon() * env.tanh_half(),
    })
}

/// Long-time `(⟨D+⟩, ⟨D0⟩)` to first order in `ξ`. `⟨D−⟩` is the conjugate of `⟨D+⟩`.
pub fn stationary_bloch(
    coeffs: &KineticCoefficients,
    sys: &SpinSystem,
    env: &Environment,
    drive: &Drive,
    tau: f64,
) -> (Complex64, f64) {
    let th = env.tanh_half();
    let d0 = -th;
    if drive.xi == 0.0 {
        return (Complex64::new(0.0, 0.0), d0);
    }
    let i = Complex64::i();
    let g = coeffs.gamma_beta;
    let w = coeffs.omega_r_beta;
    let co = Complex64::from_polar(1.0, drive.omega * tau);
    let lower = Complex64::new(w - drive.omega, g);
    let upper = Complex64::new(w + drive.omega, g);
    let d_plus = -0.5 * i * drive.xi * sys.delta() * th * (co / lower - co.conj() / upper);
    (d_plus, d0)
}

/// `X(τ) = −ε·tanh(β/2) − ξ·A·sin(Ωτ − φ)`.
///
/// The sign of the oscillating term is the one obtained by recombining
/// [`stationary_bloch`] into `ε⟨D0⟩ − Δ(⟨D+⟩ + ⟨D−⟩)`, which is also what the
/// equations of motion produce: the response opposes the applied force.
pub fn stationary_x(
    coeffs: &KineticCoefficients,
    sys: &SpinSystem,
    env: &Environment,
    drive: &Drive,
    tau: f64,
) -> Result<f64> {
    let offset = -sys.epsilon() * env.tanh_half();
    if drive.xi == 0.0 {
        return Ok(offset);
    }
    let a = amplitude(coeffs, sys, env, drive.omega)?;
    let phi = phase_delay(coeffs, drive.omega)?;
    Ok(offset - drive.xi * a * (drive.omega * tau - phi).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn sys() -> SpinSystem {
        SpinSystem::from_delta(0.35).unwrap()
    }

    fn coeffs(gamma_beta: f64, omega_r: f64) -> KineticCoefficients {
        KineticCoefficients {
            gamma: gamma_beta,
            gamma_beta,
            sigma_beta: 1.0 - omega_r,
            omega_r_beta: omega_r,
            quad_error: 0.0,
        }
    }

    /// Ohmic η = 0.59, Λ = 2 at T = 0, with σ from its closed form.
    fn ohmic_vacuum() -> KineticCoefficients {
        let sigma = 0.8775 * 3.0 * 0.59 / PI * 3f64.ln();
        KineticCoefficients {
            gamma: 0.072275,
            gamma_beta: 0.072275,
            sigma_beta: sigma,
            omega_r_beta: 1.0 - sigma,
            quad_error: 0.0,
        }
    }

    #[test]
    fn drive_validation() {
        assert!(Drive::new(-1e-3, 0.1).is_err());
        assert!(Drive::new(1e-3, 0.0).is_err());
        assert!(Drive::new(1e-3, 0.1).unwrap().is_perturbative());
        assert!(!Drive::new(0.2, 0.1).unwrap().is_perturbative());
    }

    #[test]
    fn vacuum_amplitude_and_snr() {
        // 30-digit plug-in of the closed forms
        let k = ohmic_vacuum();
        let env = Environment::zero();
        assert_relative_eq!(amplitude(&k, &sys(), &env, 0.1).unwrap(), 0.547_460_165_077_663_5, max_relative = 1e-13);
        assert_relative_eq!(snr(&k, &sys(), &env, 0.1).unwrap(), 7.574_682_325_529_762, max_relative = 1e-13);
    }

    #[test]
    fn quasi_static_limit() {
        let k = ohmic_vacuum();
        let (w, g) = (k.omega_r_beta, k.gamma_beta);
        let a = amplitude(&k, &sys(), &Environment::zero(), 1e-9).unwrap();
        assert_relative_eq!(a, 2.0 * 0.1225 * w / (w * w + g * g), max_relative = 1e-12);
        assert!(phase_delay(&k, 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn anti_resonance() {
        let k = coeffs(0.1, 0.0);
        let env = Environment::new(0.3).unwrap();
        assert_eq!(amplitude(&k, &sys(), &env, 0.1).unwrap(), 0.0);
        assert_eq!(snr(&k, &sys(), &env, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn phase_quadrants() {
        // denominator zero: (ω_R)² + γ² = Ω²
        let k = coeffs(0.06, 0.08);
        assert_relative_eq!(phase_delay(&k, 0.1).unwrap(), PI / 2.0, max_relative = 1e-12);
        let nearly_undamped = coeffs(1e-12, 0.3);
        assert_relative_eq!(phase_delay(&nearly_undamped, 0.5).unwrap(), PI, max_relative = 1e-9);
        assert!(phase_delay(&nearly_undamped, 0.5).unwrap() < PI);
    }

    #[test]
    fn snr_requires_damping() {
        let k = coeffs(0.0, 0.5);
        assert!(matches!(snr(&k, &sys(), &Environment::zero(), 0.1), Err(Error::SingularModel(_))));
    }

    #[test]
    fn hot_bath_suppresses_snr() {
        // γ^β = γ·coth(β/2) grows while tanh(β/2) shrinks
        let sys = sys();
        let mut last = f64::INFINITY;
        for t in [1.0, 10.0, 100.0, 1000.0] {
            let env = Environment::new(t).unwrap();
            let g = 0.072275 / env.tanh_half();
            let r = snr(&coeffs(g, 0.7), &sys, &env, 0.1).unwrap();
            assert!(r < last);
            last = r;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn undriven_stationary_state_is_thermal() {
        let env = Environment::new(0.4).unwrap();
        let drive = Drive::new(0.0, 0.1).unwrap();
        let (dp, d0) = stationary_bloch(&ohmic_vacuum(), &sys(), &env, &drive, 12.3);
        assert_eq!(dp, Complex64::new(0.0, 0.0));
        assert_eq!(d0, -(1.25f64).tanh());
        let x = stationary_x(&ohmic_vacuum(), &sys(), &env, &drive, 12.3).unwrap();
        assert_eq!(x, -sys().epsilon() * (1.25f64).tanh());
    }

    #[test]
    fn period_average_is_equilibrium() {
        let env = Environment::new(0.3).unwrap();
        let drive = Drive::new(1e-2, 0.1).unwrap();
        let k = ohmic_vacuum();
        let n = 400;
        let period = 2.0 * PI / drive.omega;
        let mean = (0..n)
            .map(|j| stationary_x(&k, &sys(), &env, &drive, period * j as f64 / n as f64).unwrap())
            .sum::<f64>()
            / n as f64;
        assert_abs_diff_eq!(mean, -sys().epsilon() * env.tanh_half(), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn bloch_recombination_reproduces_waveform(
            g in 1e-3f64..2.0,
            w in -3.0f64..3.0,
            omega in 0.01f64..2.0,
            t in 0.0f64..3.0,
            tau in 0.0f64..500.0,
        ) {
            let k = coeffs(g, w);
            let sys = sys();
            let env = Environment::new(t).unwrap();
            let drive = Drive::new(1e-3, omega).unwrap();
            let (dp, d0) = stationary_bloch(&k, &sys, &env, &drive, tau);
            let x = sys.epsilon() * d0 - 2.0 * sys.delta() * dp.re;
            let expected = stationary_x(&k, &sys, &env, &drive, tau).unwrap();
            let scale = drive.xi * amplitude(&k, &sys, &env, omega).unwrap().abs() + 1e-300;
            prop_assert!((x - expected).abs() <= 1e-11 * scale + 1e-15);
        }

        #[test]
        fn recombined_amplitude_matches_closed_form(
            g in 1e-3f64..2.0,
            w in -3.0f64..3.0,
            omega in 0.01f64..2.0,
        ) {
            // |D+| envelope over a period gives the amplitude of X's oscillation
            let k = coeffs(g, w);
            let sys = sys();
            let env = Environment::new(0.3).unwrap();
            let drive = Drive::new(1.0, omega).unwrap();
            let a = amplitude(&k, &sys, &env, omega).unwrap();
            // X_osc = −2Δ Re D+; sample at the quarter points of sin/cos
            let tau_s = 0.0;
            let tau_c = 0.5 * PI / omega;
            let xs = -2.0 * sys.delta() * stationary_bloch(&k, &sys, &env, &drive, tau_s).0.re;
            let xc = -2.0 * sys.delta() * stationary_bloch(&k, &sys, &env, &drive, tau_c).0.re;
            let recombined = xs.hypot(xc);
            prop_assert!((recombined - a.abs()).abs() <= 1e-12 * a.abs().max(1e-300));
        }

        #[test]
        fn phase_in_range_and_increasing(g in 1e-4f64..2.0, w in -3.0f64..3.0, o1 in 1e-3f64..3.0, o2 in 1e-3f64..3.0) {
            let k = coeffs(g, w);
            let (lo, hi) = if o1 < o2 { (o1, o2) } else { (o2, o1) };
            let p_lo = phase_delay(&k, lo).unwrap();
            let p_hi = phase_delay(&k, hi).unwrap();
            prop_assert!((0.0..PI).contains(&p_lo));
            prop_assert!((0.0..PI).contains(&p_hi));
            prop_assert!(p_hi >= p_lo - 1e-12);
        }

        #[test]
        fn snr_vanishes_only_at_zero_renormalised_frequency(g in 1e-3f64..2.0, w in -3.0f64..3.0, t in 1e-2f64..5.0) {
            let env = Environment::new(t).unwrap();
            let r = snr(&coeffs(g, w), &sys(), &env, 0.1).unwrap();
            prop_assert_eq!(r == 0.0, w == 0.0);
        }
    }
}
