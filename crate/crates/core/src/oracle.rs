//! Reference routines that reach the same quantities by different routes.
//!
//! Nothing here shares code with the production quadrature beyond the
//! spectral density itself; these functions exist to validate it.

use std::f64::consts::PI;

use crate::dispersion::SpinSystem;
use crate::spectral::{j_beta_unchecked, Environment, SpectralModel};

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

struct GradedRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GradedRule {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(12);
        GradedRule { nodes, weights }
    }

    /// Composite Gauss–Legendre on `[a, b]` with panels no wider than a
    /// fixed fraction of the distance to the nearest grading point.
    fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, grading: &[f64]) -> f64 {
        let width_limit = |x: f64| {
            let d = grading.iter().map(|g| (x - g).abs()).fold(f64::INFINITY, f64::min);
            (0.1 * d).max(1e-12).min(0.05 * x.abs().max(1.0))
        };
        let mut total = 0.0;
        let mut left = a;
        while left < b {
            let mut h = width_limit(left).min(b - left);
            // panels start at the near side of a grading point; keep them short
            while h > width_limit(left + h) && h > 1e-12 {
                h *= 0.5;
            }
            let right = if b - (left + h) < 1e-14 { b } else { left + h };
            let c = 0.5 * (left + right);
            let half = 0.5 * (right - left);
            total += half
                * self
                    .nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(x, w)| w * f(c + half * x))
                    .sum::<f64>();
            left = right;
        }
        total
    }
}

/// `σ^β` as the limit of the symmetric-exclusion sum
/// `[∫₀^{1−e} + ∫_{1+e}^∞] J^β(ω)/(ω² − 1) dω` for `e = 2^-k`, extrapolated
/// to `e → 0` with a Richardson table.
///
/// The excluded window contributes a power series in `e`, so successive
/// halvings eliminate `e, e², …` in turn. The tail beyond `W` is mapped
/// to `t = 1/ω` and integrated numerically rather than in closed form.
pub fn sigma_beta_brute_force(sys: &SpinSystem, model: &SpectralModel, env: &Environment) -> f64 {
    let prefactor = sys.epsilon() * sys.epsilon() * 2.0 / PI;
    if prefactor == 0.0 {
        return 0.0;
    }
    let rule = GradedRule::new();
    let f = |w: f64| j_beta_unchecked(model, env, w) / ((w - 1.0) * (w + 1.0));
    let edge = model.breakpoint();
    let far = 20.0f64.max(4.0 * edge);
    let t = env.temperature();

    // ∫_far^∞ f = ∫_0^{1/far} J^β(1/s)/(1 − s²) ds
    let tail_integrand = |s: f64| {
        if s == 0.0 {
            model.plateau()
        } else {
            j_beta_unchecked(model, env, 1.0 / s) / ((1.0 - s) * (1.0 + s))
        }
    };
    let tail = rule.integrate(&tail_integrand, 0.0, 1.0 / far, &[]);

    let excluded_sum = |e: f64| {
        let lo = 1.0 - e;
        let hi = 1.0 + e;
        let mut cuts = vec![0.0, lo, hi, far];
        if edge > 0.0 && edge < far && (edge < lo || edge > hi) {
            cuts.push(edge);
        }
        cuts.sort_by(f64::total_cmp);
        let grading = [0.0, 1.0, edge, 2.0 * t];
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            if pair[0] == lo && pair[1] == hi {
                continue;
            }
            total += rule.integrate(&f, pair[0], pair[1], &grading);
        }
        total
    };

    let levels = 6;
    let first = 4;
    let mut table: Vec<f64> = (0..levels)
        .map(|k| excluded_sum(2f64.powi(-((first + k) as i32))))
        .collect();
    for order in 1..levels {
        let factor = 2f64.powi(order as i32);
        for k in (order..levels).rev() {
            table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
        }
    }
    prefactor * (table[levels - 1] + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert_abs_diff_eq!(s, 2.0 / 23.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn brute_force_reproduces_zero_temperature_closed_forms() {
        let sys = SpinSystem::from_delta(0.35).unwrap();
        let eps2 = 1.0 - 0.35 * 0.35;
        let ohmic = SpectralModel::ohmic(0.59, 2.0).unwrap();
        let v = sigma_beta_brute_force(&sys, &ohmic, &Environment::zero());
        assert_abs_diff_eq!(v, eps2 * 3.0 * 0.59 / PI * 3f64.ln(), epsilon = 1e-9);
        let gap = SpectralModel::constant_gap(3.5, 0.5).unwrap();
        let v = sigma_beta_brute_force(&sys, &gap, &Environment::zero());
        assert_abs_diff_eq!(v, eps2 * 3.5 / PI * 3f64.ln(), epsilon = 1e-9);
    }
}
