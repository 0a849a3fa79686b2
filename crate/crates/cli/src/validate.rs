//! Built-in cross-checks between the production routines and independent
//! references. Sampling uses a fixed seed so reports are reproducible.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use qsr_core::dispersion::{gamma_beta, gamma_zero_t, kinetic_coefficients, sigma_beta, sigma_beta_subtracted};
use qsr_core::dynamics::{extract_harmonic_response, integrate_driven, relax_closed_form};
use qsr_core::oracle::sigma_beta_brute_force;
use qsr_core::response::{amplitude, phase_delay};
use qsr_core::spectral::{eval_j, eval_j_beta};
use qsr_core::{BlochState, Drive, Environment, SpectralModel, SpinSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::commands::default_step;
use crate::preset::{FigurePreset, DELTA_RATIO, LAMBDA, MU, OMEGA};

pub const SEED: u64 = 0x5eed_0051;
pub const CLOSED_FORM_LIMIT: f64 = 1e-8;
pub const BRUTE_FORCE_LIMIT: f64 = 1e-7;
pub const RELAXATION_LIMIT: f64 = 1e-8;
pub const AMPLITUDE_LIMIT: f64 = 0.01;
pub const PHASE_LIMIT: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: &str, worst: f64, limit: f64, what: &str) -> Check {
    Check {
        name: name.to_string(),
        passed: worst <= limit,
        detail: format!("{what} {worst:.3e} (limit {limit:.0e})"),
    }
}

fn failed(name: &str, e: qsr_core::Error) -> Check {
    Check { name: name.to_string(), passed: false, detail: e.to_string() }
}

fn preset_model(p: FigurePreset) -> SpectralModel {
    let eta = p.eta().expect("curve preset");
    match p {
        FigurePreset::Fig6a | FigurePreset::Fig6a1 | FigurePreset::Fig6a2 => SpectralModel::ohmic(eta, LAMBDA),
        _ => SpectralModel::constant_gap(eta, MU),
    }
    .expect("preset parameters are valid")
}

/// `σ` at `T = 0` for the Ohmic (`Λ = 2`) and constant (`μ = 1/2`) presets.
fn vacuum_shift(sys: &SpinSystem, model: &SpectralModel) -> f64 {
    let eps2 = sys.epsilon() * sys.epsilon();
    match *model {
        SpectralModel::Ohmic { eta, .. } => eps2 * 3.0 * eta / PI * 3f64.ln(),
        SpectralModel::ConstantGap { eta, .. } => eps2 * eta / PI * 3f64.ln(),
    }
}

fn closed_forms(sys: &SpinSystem, tol: f64) -> Check {
    let name = "vacuum shift closed forms";
    let mut worst = 0.0f64;
    for p in FigurePreset::CURVES {
        let model = preset_model(p);
        match sigma_beta(sys, &model, &Environment::zero(), tol) {
            Ok(s) => worst = worst.max((s.value - vacuum_shift(sys, &model)).abs()),
            Err(e) => return failed(name, e),
        }
    }
    check(name, worst, CLOSED_FORM_LIMIT, "max |error|")
}

/// Random `(preset, T)` pairs with `T` log-uniform on `[0.01, 5]`.
pub fn random_samples(n: usize, seed: u64) -> Vec<(FigurePreset, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p = FigurePreset::CURVES[rng.gen_range(0..FigurePreset::CURVES.len())];
            let t = (rng.gen_range(0.01f64.ln()..5f64.ln())).exp();
            (p, t)
        })
        .collect()
}

fn brute_force(sys: &SpinSystem, tol: f64) -> Check {
    let name = "shift vs symmetric-exclusion sum";
    let results: Vec<Result<f64, qsr_core::Error>> = random_samples(20, SEED)
        .into_par_iter()
        .map(|(p, t)| {
            let model = preset_model(p);
            let env = Environment::new(t)?;
            let s = sigma_beta(sys, &model, &env, tol)?;
            Ok((s.value - sigma_beta_brute_force(sys, &model, &env)).abs())
        })
        .collect();
    let mut worst = 0.0f64;
    for r in results {
        match r {
            Ok(d) => worst = worst.max(d),
            Err(e) => return failed(name, e),
        }
    }
    check(name, worst, BRUTE_FORCE_LIMIT, "max |difference|")
}

fn subtraction(sys: &SpinSystem, tol: f64) -> Check {
    let name = "subtraction-point independence";
    let mut worst = 0.0f64;
    for (p, t) in random_samples(6, SEED + 1) {
        let model = preset_model(p);
        let run = || -> Result<f64, qsr_core::Error> {
            let env = Environment::new(t)?;
            let plain = sigma_beta(sys, &model, &env, tol)?.value;
            let mut d = 0.0f64;
            for w1 in [0.0, 0.5, 2.0] {
                d = d.max((sigma_beta_subtracted(sys, &model, &env, w1, tol)?.value - plain).abs());
            }
            Ok(d)
        };
        match run() {
            Ok(d) => worst = worst.max(d),
            Err(e) => return failed(name, e),
        }
    }
    check(name, worst, 10.0 * CLOSED_FORM_LIMIT, "max |difference|")
}

fn identities(sys: &SpinSystem, tol: f64) -> Check {
    let name = "identities";
    let mut worst_ratio = 0.0f64;
    let mut problems = Vec::new();
    for (p, t) in random_samples(10, SEED + 2) {
        let model = preset_model(p);
        let env = match Environment::new(t) {
            Ok(e) => e,
            Err(e) => return failed(name, e),
        };
        let ratio = gamma_beta(sys, &model, &env) / gamma_zero_t(sys, &model);
        worst_ratio = worst_ratio.max((ratio / env.coth_half(1.0) - 1.0).abs());
        match kinetic_coefficients(sys, &model, &env, tol) {
            Ok(k) if k.omega_r_beta != 1.0 - k.sigma_beta => problems.push(format!("omega_R != 1 - sigma at T = {t}")),
            Ok(_) => {}
            Err(e) => return failed(name, e),
        }
        for i in 1..=50 {
            let w = 0.05 * i as f64;
            match (eval_j(&model, w), eval_j_beta(&model, &env, w)) {
                (Ok(j), Ok(jb)) if jb < j => problems.push(format!("J^beta < J at omega = {w}, T = {t}")),
                (Err(e), _) | (_, Err(e)) => return failed(name, e),
                _ => {}
            }
        }
    }
    if worst_ratio > 1e-12 {
        problems.push(format!("gamma_beta/gamma off coth by {worst_ratio:.3e}"));
    }
    Check {
        name: name.to_string(),
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("coth ratio error {worst_ratio:.3e}; omega_R = 1 - sigma; J^beta >= J")
        } else {
            problems.join("; ")
        },
    }
}

fn relaxation(sys: &SpinSystem, tol: f64) -> Check {
    let name = "undriven integration vs closed-form relaxation";
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let model = preset_model(FigurePreset::Fig6a);
    let mut worst = 0.0f64;
    for &t in &[0.1, 1.0] {
        let run = |rng: &mut ChaCha8Rng| -> Result<f64, qsr_core::Error> {
            let env = Environment::new(t)?;
            let k = kinetic_coefficients(sys, &model, &env, tol)?;
            let state0 = random_state(rng);
            let drive = Drive::new(0.0, OMEGA)?;
            let traj = integrate_driven(&state0, &k, sys, &drive, 5.0 / k.gamma_beta, default_step(&k, OMEGA))?;
            let mut d = 0.0f64;
            for (tau, s) in traj.times().iter().zip(traj.states()) {
                d = d.max(s.distance(&relax_closed_form(&state0, &k, *tau)?));
            }
            Ok(d)
        };
        match run(&mut rng) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return failed(name, e),
        }
    }
    check(name, worst, RELAXATION_LIMIT, "max state distance")
}

/// Uniform physical Bloch state: `|d0| ≤ 1`, `|d+|² ≤ (1 − d0²)/4`.
pub fn random_state<R: Rng>(rng: &mut R) -> BlochState {
    let d0: f64 = rng.gen_range(-1.0..1.0);
    let r = 0.5 * (1.0 - d0 * d0).sqrt() * rng.gen::<f64>().sqrt();
    let theta = rng.gen_range(0.0..2.0 * PI);
    BlochState::new(Complex64::from_polar(r, theta), d0).expect("sampled inside the physical region")
}

fn driven_response(sys: &SpinSystem, tol: f64) -> Check {
    let name = "driven integration vs linear response";
    let model = preset_model(FigurePreset::Fig6a);
    let run = || -> Result<(f64, f64), qsr_core::Error> {
        let env = Environment::new(0.3)?;
        let k = kinetic_coefficients(sys, &model, &env, tol)?;
        let drive = Drive::new(1e-3, OMEGA)?;
        let n = 5;
        let tau_end = 8.0 / k.gamma_beta + n as f64 * 2.0 * PI / OMEGA;
        let traj = integrate_driven(&BlochState::thermal(&env), &k, sys, &drive, tau_end, default_step(&k, OMEGA))?;
        let fit = extract_harmonic_response(&traj, OMEGA, n)?;
        let a = amplitude(&k, sys, &env, OMEGA)?.abs();
        let phi = phase_delay(&k, OMEGA)?;
        let da = (fit.amplitude / drive.xi - a).abs() / a;
        let dphi = ((fit.phase - phi + PI / 2.0).rem_euclid(PI) - PI / 2.0).abs();
        Ok((da, dphi))
    };
    match run() {
        Ok((da, dphi)) => Check {
            name: name.to_string(),
            passed: da <= AMPLITUDE_LIMIT && dphi <= PHASE_LIMIT,
            detail: format!(
                "amplitude {da:.3e} (limit {AMPLITUDE_LIMIT:.0e}), phase {dphi:.3e} rad (limit {PHASE_LIMIT:.0e})"
            ),
        },
        Err(e) => failed(name, e),
    }
}

/// Runs every check at quadrature tolerance `tol`.
pub fn run_suite(tol: f64) -> Vec<Check> {
    let sys = SpinSystem::from_delta(DELTA_RATIO).expect("valid preset system");
    vec![
        closed_forms(&sys, tol),
        brute_force(&sys, tol),
        subtraction(&sys, tol),
        identities(&sys, tol),
        relaxation(&sys, tol),
        driven_response(&sys, tol),
    ]
}
