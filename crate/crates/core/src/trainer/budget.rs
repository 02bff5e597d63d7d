//! Step-size and iteration budgets, and the one-step descent bound.

use crate::error::{PikeError, Result};
use crate::types::BatchPlan;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceBudget {
    pub delta: f64,
    pub eta: f64,
    pub t_bar: u64,
    pub t_bar_uniform: u64,
}

/// Ceiling that ignores floating-point fuzz just above an integer.
fn ceil_steps(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Stepsize and iteration budgets for driving every task's squared gradient
/// norm below `delta`. `sigma_sq` holds per-task noise variances; the adaptive
/// budget uses their maximum, the uniform-mix budget `K` times their sum.
pub fn pike_budget(
    delta: f64,
    delta_l: f64,
    smoothness: f64,
    sigma_sq: &[f64],
    b: usize,
    beta: f64,
    gamma: f64,
) -> Result<ConvergenceBudget> {
    if !(delta > 0.0 && delta_l > 0.0 && smoothness > 0.0 && beta > 0.0 && gamma > 0.0 && b >= 1) {
        return Err(PikeError::invalid("pike_budget needs positive delta, gap, L, beta, gamma, b"));
    }
    if sigma_sq.is_empty() || sigma_sq.iter().any(|s| !(*s >= 0.0)) {
        return Err(PikeError::invalid("pike_budget needs nonnegative per-task variances"));
    }
    let b = b as f64;
    let s_max = sigma_sq.iter().copied().fold(0.0, f64::max);
    let s_sum: f64 = sigma_sq.iter().sum();
    let eta = beta * delta / (smoothness * s_max / b + smoothness * gamma * delta);
    let t_bar = 2.0 * smoothness * delta_l * (s_max / b + gamma * delta) / (delta * delta * beta * beta);
    let k = sigma_sq.len() as f64;
    let t_uniform = 2.0 * smoothness * delta_l * (delta + k * s_sum / b) / (delta * delta);
    Ok(ConvergenceBudget {
        delta,
        eta,
        t_bar: ceil_steps(t_bar),
        t_bar_uniform: ceil_steps(t_uniform),
    })
}

/// Right-hand side of the one-step descent bound for `plan`:
/// `L(θ) + Σ_k b_k(-ηβ/b ‖g_k‖² + Lη²/(2b²) σ_k²) + Σ_k b_k² Lη²γ/(2b²) ‖g_k‖²`.
#[allow(clippy::too_many_arguments)]
pub fn descent_bound_rhs(
    loss: f64,
    grad_norm_sq: &[f64],
    sigma_sq: &[f64],
    plan: &BatchPlan,
    eta: f64,
    beta: f64,
    gamma: f64,
    smoothness: f64,
) -> f64 {
    let b = plan.total() as f64;
    let mut rhs = loss;
    for ((&c, &g), &s) in plan.counts().iter().zip(grad_norm_sq).zip(sigma_sq) {
        let c = c as f64;
        rhs += c * (-eta * beta / b * g + smoothness * eta * eta / (2.0 * b * b) * s);
        rhs += c * c * smoothness * eta * eta * gamma / (2.0 * b * b) * g;
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_examples() {
        let b = pike_budget(0.1, 1.0, 1.0, &[1.0], 10, 1.0, 1.0).unwrap();
        assert_eq!(b.t_bar, 40);
        let b = pike_budget(0.1, 1.0, 1.0, &[1.0; 4], 10, 1.0, 1.0).unwrap();
        // 2(0.1 + 4·4/10)/0.01
        assert_eq!(b.t_bar_uniform, 340);
        assert_eq!(b.t_bar, 40);
        assert!((b.eta - 0.1 / (0.1 + 0.1)).abs() < 1e-15);
    }

    /// Uniform mix feeds each task b/K samples, so one step decreases the loss
    /// by at least (η/K - Lη²/2K²)δ - Lη²Σσ²/(2bK) while ‖∇L‖² > δ. The
    /// budget is the gap divided by the best such decrease over η.
    #[test]
    fn uniform_budget_matches_stepsize_search() {
        for (l, gap, delta, sig, b) in [
            (1.0, 1.0, 0.1, vec![1.0; 4], 10usize),
            (2.0, 0.5, 0.05, vec![9.0, 0.01], 16),
            (0.3, 4.0, 0.2, vec![0.5, 2.0, 1.0], 3),
        ] {
            let k = sig.len() as f64;
            let s: f64 = sig.iter().sum();
            let decrease = |eta: f64| {
                (eta / k - l * eta * eta / (2.0 * k * k)) * delta
                    - l * eta * eta * s / (2.0 * b as f64 * k)
            };
            let best = (1..2_000_000)
                .map(|i| decrease(i as f64 * 1e-6 * 10.0 / l))
                .fold(f64::NEG_INFINITY, f64::max);
            let want = gap / best;
            let got = pike_budget(delta, gap, l, &sig, b, 1.0, 1.0).unwrap().t_bar_uniform as f64;
            assert!(got >= want - 1e-6 * want && got < want * (1.0 + 1e-6) + 1.0, "{got} vs {want}");
        }
    }

    #[test]
    fn noiseless_budget() {
        for (l, gap, delta) in [(1.0, 1.0, 0.1), (2.0, 3.0, 0.01), (0.5, 7.0, 0.25)] {
            let b = pike_budget(delta, gap, l, &[0.0, 0.0], 4, 1.0, 1.0).unwrap();
            assert_eq!(b.t_bar, ceil_steps(2.0 * l * gap / delta));
            assert!((b.eta - 1.0 / l).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(pike_budget(0.0, 1.0, 1.0, &[1.0], 1, 1.0, 1.0).is_err());
        assert!(pike_budget(0.1, 1.0, 1.0, &[], 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn rhs_single_task() {
        // one task, b_k = b: L - ηβ g + Lη²σ²/(2b) + Lη²γ g/2
        let plan = BatchPlan::new(vec![4]).unwrap();
        let v = descent_bound_rhs(1.0, &[2.0], &[3.0], &plan, 0.1, 1.0, 1.0, 2.0);
        let oracle = 1.0 - 0.1 * 2.0 + 2.0 * 0.01 * 3.0 / 8.0 + 2.0 * 0.01 * 2.0 / 2.0;
        assert!((v - oracle).abs() < 1e-15);
    }
}
