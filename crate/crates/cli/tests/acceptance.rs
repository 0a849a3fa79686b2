//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use qsr_core::dispersion::{gamma_beta, gamma_zero_t, kinetic_coefficients, sigma_beta};
use qsr_core::dynamics::integrate_driven;
use qsr_core::oracle::sigma_beta_brute_force;
use qsr_core::response::snr;
use qsr_core::scan::{classify_curve, find_peak, ResonanceKind, ResonanceReport};
use qsr_core::spectral::{eval_j, eval_j_beta};
use qsr_core::{Drive, Environment, KineticCoefficients, SpectralModel, SpinSystem};
use qsr_lab::commands::{default_step, simulate, snr_curve};
use qsr_lab::config::{Axis, EnvironmentBlock, RawConfig};
use qsr_lab::preset::FigurePreset;
use qsr_lab::validate::{random_samples, random_state};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn sys() -> SpinSystem {
    SpinSystem::from_delta(0.35).unwrap()
}

fn model(p: FigurePreset) -> SpectralModel {
    p.config().spectral_model().unwrap()
}

fn with_t_axis(p: FigurePreset, n: usize) -> RawConfig {
    let mut cfg = p.config();
    cfg.environment = Some(EnvironmentBlock { t: None, t_axis: Some(Axis::log(0.01, 2.0, n)) });
    cfg
}

fn with_temperature(p: FigurePreset, t: f64) -> RawConfig {
    let mut cfg = p.config();
    cfg.environment = Some(EnvironmentBlock { t: Some(t), t_axis: None });
    cfg
}

/// Classifies a preset's `R(T)` on an `n`-point log axis over `[0.01, 2]`.
fn classify(p: FigurePreset, n: usize) -> Result<(Vec<f64>, ResonanceReport), String> {
    let rows = snr_curve(&with_t_axis(p, n)).map_err(|e| e.to_string())?;
    let mut t = Vec::new();
    let mut r = Vec::new();
    let mut w = Vec::new();
    for (temp, row) in rows {
        let row = row.map_err(|e| format!("T = {temp}: {e}"))?;
        t.push(row.t);
        r.push(row.snr);
        w.push(row.omega_r);
    }
    let report = classify_curve(&t, &r, &w).map_err(|e| e.to_string())?;
    Ok((t, report))
}

fn describe(report: &ResonanceReport) -> String {
    let peaks: Vec<String> = report.peak_temperatures.iter().map(|t| format!("{t:.4}")).collect();
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |t| format!("{t:.4}"));
    format!(
        "{:?}, peaks [{}], dip {}, omega_R zero {}",
        report.kind,
        peaks.join(", "),
        opt(report.dip_temperature),
        opt(report.omega_r_zero_crossing)
    )
}

fn criterion_1() -> Outcome {
    let sys = sys();
    let m = model(FigurePreset::Fig6a);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_pop = 0.0f64;
    let mut worst_coh = 0.0f64;
    for beta in [0.5, 2.0, 10.0] {
        let env = Environment::from_beta(beta).unwrap();
        let k = kinetic_coefficients(&sys, &m, &env, 1e-10).unwrap();
        let drive = Drive::new(0.0, 0.1).unwrap();
        let z = 2.0 * (beta / 2.0).cosh();
        let (upper, lower) = ((-beta / 2.0).exp() / z, (beta / 2.0).exp() / z);
        for _ in 0..10 {
            let s0 = random_state(&mut rng);
            let traj = match integrate_driven(&s0, &k, &sys, &drive, 20.0 / k.gamma_beta, default_step(&k, 0.1)) {
                Ok(t) => t,
                Err(e) => return outcome(false, format!("beta = {beta}: {e}")),
            };
            let last = traj.states().last().unwrap();
            let (p_up, p_down) = last.populations();
            worst_pop = worst_pop.max((p_up - upper).abs()).max((p_down - lower).abs());
            worst_coh = worst_coh.max(last.d_plus.norm());
        }
    }
    outcome(
        worst_pop <= 1e-6 && worst_coh < 1e-6,
        format!("max population error {worst_pop:.2e}, max |D+| {worst_coh:.2e} (limits 1e-6)"),
    )
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [FigurePreset::Fig6a, FigurePreset::Fig6b] {
        let start = Instant::now();
        match classify(p, 200) {
            Ok((t, report)) => {
                let mut line = format!("{p}: {}", describe(&report));
                let single = report.kind == ResonanceKind::SingleResonance;
                if single {
                    let idx = t.iter().position(|&x| x == report.peak_temperatures[0]).unwrap();
                    let (lo, hi) = (t[idx.saturating_sub(1)], t[(idx + 1).min(t.len() - 1)]);
                    match find_peak(&sys(), &model(p), 0.1, lo, hi, 1e-9) {
                        Ok((tp, rp)) => {
                            let inside = tp > 0.1 && tp < 0.6;
                            ok &= inside;
                            line += &format!(", refined peak T = {tp:.4} (R = {rp:.4})");
                        }
                        Err(e) => {
                            ok = false;
                            line += &format!(", refinement failed: {e}");
                        }
                    }
                } else {
                    ok = false;
                }
                let secs = start.elapsed().as_secs_f64();
                ok &= secs < 30.0;
                parts.push(format!("{line} [{secs:.2} s]"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{p}: {e}"));
            }
        }
    }
    outcome(ok, format!("expected SingleResonance with peak in (0.1, 0.6); {}", parts.join("; ")))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [FigurePreset::Fig6a1, FigurePreset::Fig6b1] {
        match classify(p, 200) {
            Ok((t, report)) => {
                let mut good = report.kind == ResonanceKind::AntiResonance;
                if let (Some(dip), Some(zero)) = (report.dip_temperature, report.omega_r_zero_crossing) {
                    let k = t.partition_point(|&x| x < zero).clamp(1, t.len() - 1);
                    let step = t[k] - t[k - 1];
                    good &= (dip - zero).abs() <= 2.0 * step;
                } else {
                    good = false;
                }
                ok &= good;
                parts.push(format!("{p}: {}", describe(&report)));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{p}: {e}"));
            }
        }
    }
    outcome(ok, format!("expected AntiResonance with dip at the omega_R zero; {}", parts.join("; ")))
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [FigurePreset::Fig6a2, FigurePreset::Fig6b2] {
        for n in [200, 399] {
            match classify(p, n) {
                Ok((_, report)) => {
                    ok &= report.kind == ResonanceKind::DoubleResonance && report.peak_temperatures.len() == 2;
                    parts.push(format!("{p} n={n}: {}", describe(&report)));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("{p} n={n}: {e}"));
                }
            }
        }
    }
    outcome(ok, format!("expected DoubleResonance at both resolutions; {}", parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let sys = sys();
    let eps2 = sys.epsilon() * sys.epsilon();
    let mut worst_closed = 0.0f64;
    for p in FigurePreset::CURVES {
        let m = model(p);
        let exact = match m {
            SpectralModel::Ohmic { eta, .. } => eps2 * 3.0 * eta / PI * 3f64.ln(),
            SpectralModel::ConstantGap { eta, .. } => eps2 * eta / PI * 3f64.ln(),
        };
        match sigma_beta(&sys, &m, &Environment::zero(), 1e-10) {
            Ok(s) => worst_closed = worst_closed.max((s.value - exact).abs()),
            Err(e) => return outcome(false, format!("{p} at T = 0: {e}")),
        }
    }
    let diffs: Vec<Result<f64, String>> = random_samples(20, SEED)
        .into_par_iter()
        .map(|(p, t)| {
            let m = model(p);
            let env = Environment::new(t).map_err(|e| e.to_string())?;
            let s = sigma_beta(&sys, &m, &env, 1e-10).map_err(|e| format!("{p} at T = {t}: {e}"))?;
            Ok((s.value - sigma_beta_brute_force(&sys, &m, &env)).abs())
        })
        .collect();
    let mut worst_brute = 0.0f64;
    for d in diffs {
        match d {
            Ok(d) => worst_brute = worst_brute.max(d),
            Err(e) => return outcome(false, e),
        }
    }
    outcome(
        worst_closed <= 1e-8 && worst_brute <= 1e-7,
        format!("T=0 closed forms max |error| {worst_closed:.2e} (limit 1e-8); 20 random T vs brute force max {worst_brute:.2e} (limit 1e-7)"),
    )
}

fn criterion_6() -> Outcome {
    let cases: Vec<(FigurePreset, f64)> =
        FigurePreset::CURVES.iter().flat_map(|&p| [0.1, 0.3, 1.0].map(|t| (p, t))).collect();
    let results: Vec<Result<(f64, f64), String>> = cases
        .par_iter()
        .map(|&(p, t)| {
            let (_, summary) = simulate(&with_temperature(p, t)).map_err(|e| format!("{p} T={t}: {e}"))?;
            let r = summary.response.ok_or_else(|| format!("{p} T={t}: no response fit"))?;
            Ok((r.amplitude_rel_error, r.phase_error.abs()))
        })
        .collect();
    let mut worst_a = 0.0f64;
    let mut worst_phi = 0.0f64;
    for r in results {
        match r {
            Ok((a, phi)) => {
                // NaN (zero closed-form amplitude) must not pass silently
                worst_a = if a.is_nan() { f64::NAN } else { worst_a.max(a) };
                worst_phi = worst_phi.max(phi);
            }
            Err(e) => return outcome(false, e),
        }
    }
    outcome(
        worst_a <= 0.01 && worst_phi <= 0.02,
        format!("18 runs, xi = 1e-3: max amplitude rel. error {worst_a:.2e} (limit 1e-2), max phase error {worst_phi:.2e} rad (limit 2e-2)"),
    )
}

fn criterion_7() -> Outcome {
    let sys = sys();
    let mut problems = Vec::new();
    let mut worst_ratio = 0.0f64;
    for (p, t) in random_samples(30, SEED + 7) {
        let m = model(p);
        let env = Environment::new(t).unwrap();
        let ratio = gamma_beta(&sys, &m, &env) / gamma_zero_t(&sys, &m);
        worst_ratio = worst_ratio.max((ratio / env.coth_half(1.0) - 1.0).abs());
        let k = kinetic_coefficients(&sys, &m, &env, 1e-9).unwrap();
        if k.omega_r_beta != 1.0 - k.sigma_beta {
            problems.push(format!("omega_R != 1 - sigma for {p} at T = {t}"));
        }
        for i in 1..=400 {
            let w = 0.01 * i as f64;
            if eval_j_beta(&m, &env, w).unwrap() < eval_j(&m, w).unwrap() {
                problems.push(format!("J^beta < J for {p} at T = {t}, omega = {w}"));
            }
        }
    }
    if worst_ratio > 1e-12 {
        problems.push(format!("gamma_beta/gamma differs from coth(beta/2) by {worst_ratio:.2e}"));
    }

    // R at the zero of ω_R: bisect the crossing, then evaluate with ω_R = 0
    let m = model(FigurePreset::Fig6b1);
    let omega_r = |t: f64| kinetic_coefficients(&sys, &m, &Environment::new(t).unwrap(), 1e-12).unwrap().omega_r_beta;
    let (mut lo, mut hi) = (0.01, 2.0);
    let mut r_at_zero = f64::NAN;
    if omega_r(lo).signum() != omega_r(hi).signum() {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if omega_r(mid).signum() == omega_r(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let env = Environment::new(0.5 * (lo + hi)).unwrap();
        let g = gamma_beta(&sys, &m, &env);
        let k = KineticCoefficients {
            gamma: gamma_zero_t(&sys, &m),
            gamma_beta: g,
            sigma_beta: 1.0,
            omega_r_beta: 0.0,
            quad_error: 0.0,
        };
        r_at_zero = snr(&k, &sys, &env, 0.1).unwrap();
        if r_at_zero != 0.0 {
            problems.push(format!("R = {r_at_zero} at the omega_R zero"));
        }
    } else {
        problems.push("fig6b1 has no omega_R zero crossing on [0.01, 2]".into());
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!("coth ratio error {worst_ratio:.2e}; omega_R = 1 - sigma; J^beta >= J on 12000 samples; R = {r_at_zero} at the omega_R zero (T = {lo:.6})")
        } else {
            problems.join("; ")
        },
    )
}

fn criterion_8() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qsr-lab");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (run, threads) in [(1, "1"), (2, "4")] {
        let out = dir.path().join(format!("run{run}"));
        let status = Command::new(bin)
            .args(["--preset", "fig5a", "--threads", threads, "--out"])
            .arg(&out)
            .arg("scan")
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("scan exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push(std::fs::read(out.join("scan.csv")).unwrap());
    }
    let same = outputs[0] == outputs[1];
    let lines = outputs[0].iter().filter(|&&b| b == b'\n').count();
    outcome(same, format!("fig5a scan with 1 and 4 threads: {} bytes, {lines} lines, identical = {same}", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("thermal equilibrium", criterion_1),
        ("resonance peak location", criterion_2),
        ("anti-resonance", criterion_3),
        ("double resonance", criterion_4),
        ("dispersion-integral oracle", criterion_5),
        ("ODE vs analytic response", criterion_6),
        ("identity suite", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {} ({name}): {tag} [{:.2} s] {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        failures += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

