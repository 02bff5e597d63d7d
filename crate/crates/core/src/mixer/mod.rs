//! Mixing-weight computations.

mod closed_form;
mod kkt;
mod tilt;

pub use closed_form::{example1_expected_loss, example1_optimal_w, relaxed_expected_loss};
pub use kkt::{
    kkt_coefficients, solve_simplex_qp, solve_with_dual, KktCoefficients, BISECTION_MAX_ITER,
    BISECTION_TOL,
};
pub use tilt::{duality_gap, tilt_weights, tilted_loss, TiltConfig};

use crate::error::{PikeError, Result};
use crate::types::{SimplexWeights, TaskGradStats};

pub const DEFAULT_W_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PikeConfig {
    pub zeta1: f64,
    pub zeta2: f64,
    /// Steps between weight updates.
    pub t0: usize,
    pub b: usize,
    pub w_min: f64,
}

impl Default for PikeConfig {
    fn default() -> Self {
        PikeConfig {
            zeta1: 0.1,
            zeta2: 0.01,
            t0: 1000,
            b: 256,
            w_min: DEFAULT_W_MIN,
        }
    }
}

impl PikeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta1 >= 0.0 && self.zeta1.is_finite()) {
            return Err(PikeError::config("zeta1", "must be a nonnegative number"));
        }
        if !(self.zeta2 >= 0.0 && self.zeta2.is_finite()) {
            return Err(PikeError::config("zeta2", "must be a nonnegative number"));
        }
        if self.t0 == 0 {
            return Err(PikeError::config("t0", "must be at least 1"));
        }
        if self.b == 0 {
            return Err(PikeError::config("b", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.w_min) {
            return Err(PikeError::config("w_min", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// `ζ₁‖∇L_k‖² - (ζ₂/2b)σ_k²` per task. Uses the bias-corrected norm before
    /// clamping: the exponent has no sign constraint and clamping would bias
    /// noisy tasks upward.
    fn exponents(&self, stats: &TaskGradStats) -> Vec<f64> {
        let half_b = 2.0 * self.b as f64;
        stats
            .iter()
            .map(|s| self.zeta1 * s.grad_norm_sq_unclamped - self.zeta2 / half_b * s.var_hat)
            .collect()
    }
}

/// How the tilt weights enter the balanced exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiltPower {
    /// `(y_k)²`, as in the balanced algorithm.
    #[default]
    Squared,
    Linear,
}

/// `w_k ∝ w_k e^{e_k}` with max-shifted exponentials, floored at `w_min`.
fn multiplicative(w: &[f64], exponents: &[f64], w_min: f64) -> SimplexWeights {
    let logits: Vec<f64> = w
        .iter()
        .zip(exponents)
        .map(|(&wk, &e)| {
            let e = if e.is_nan() { 0.0 } else { e.clamp(-f64::MAX, f64::MAX) };
            if wk > 0.0 {
                wk.ln() + e
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let total: f64 = raw.iter().sum();
    let floored: Vec<f64> = raw.iter().map(|&v| (v / total).max(w_min)).collect();
    SimplexWeights::normalized(floored).expect("max-shifted weights have positive mass")
}

fn check_len(w: &SimplexWeights, k: usize) -> Result<()> {
    if w.len() != k {
        return Err(PikeError::DimensionMismatch {
            expected: w.len(),
            got: k,
        });
    }
    Ok(())
}

/// Multiplicative update `w_k ← w_k exp(ζ₁‖∇L_k‖² - (ζ₂/2b)σ_k²)`.
pub fn pike_update(
    w: &SimplexWeights,
    stats: &TaskGradStats,
    cfg: &PikeConfig,
) -> Result<SimplexWeights> {
    check_len(w, stats.len())?;
    Ok(multiplicative(w, &cfg.exponents(stats), cfg.w_min))
}

/// One mirror-descent step on the relaxed bound, keeping the `w_k`-dependent
/// curvature term.
#[allow(clippy::too_many_arguments)]
pub fn mirror_step_exact(
    w: &SimplexWeights,
    stats: &TaskGradStats,
    eta: f64,
    beta: f64,
    gamma: f64,
    smoothness: f64,
    alpha: f64,
    b: usize,
) -> Result<SimplexWeights> {
    check_len(w, stats.len())?;
    if b == 0 {
        return Err(PikeError::invalid("b must be at least 1"));
    }
    let exps: Vec<f64> = stats
        .iter()
        .zip(w.iter())
        .map(|(s, &wk)| {
            alpha * eta * (beta - smoothness * eta * gamma * wk) * s.grad_norm_sq_hat
                - alpha * smoothness * eta * eta / (2.0 * b as f64) * s.var_hat
        })
        .collect();
    Ok(multiplicative(w, &exps, 0.0))
}

/// Balanced update with the tilt weights raised to `power`.
pub fn balanced_pike_update_with(
    w: &SimplexWeights,
    stats: &TaskGradStats,
    losses: &[f64],
    tilt: TiltConfig,
    cfg: &PikeConfig,
    power: TiltPower,
) -> Result<SimplexWeights> {
    check_len(w, stats.len())?;
    check_len(w, losses.len())?;
    let y = tilt_weights(losses, tilt);
    let exps: Vec<f64> = cfg
        .exponents(stats)
        .into_iter()
        .zip(&y)
        .map(|(e, &yk)| match power {
            TiltPower::Squared => yk * yk * e,
            TiltPower::Linear => yk * e,
        })
        .collect();
    Ok(multiplicative(w, &exps, cfg.w_min))
}

pub fn balanced_pike_update(
    w: &SimplexWeights,
    stats: &TaskGradStats,
    losses: &[f64],
    tilt: TiltConfig,
    cfg: &PikeConfig,
) -> Result<SimplexWeights> {
    balanced_pike_update_with(w, stats, losses, tilt, cfg, TiltPower::Squared)
}
