//! Tilted objective and its dual weights.

use crate::error::{PikeError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltConfig {
    tau: f64,
}

impl TiltConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(TiltConfig { tau })
        } else {
            Err(PikeError::invalid(format!("tau must be positive and finite, got {tau}")))
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `y_k = τ e^{τL_k} / Σ_j e^{τL_j}`; sums to `τ`.
pub fn tilt_weights(losses: &[f64], cfg: TiltConfig) -> Vec<f64> {
    let scaled: Vec<f64> = losses.iter().map(|l| cfg.tau * l).collect();
    softmax(&scaled).into_iter().map(|p| cfg.tau * p).collect()
}

/// `(1/τ) log Σ_k e^{τL_k}`.
pub fn tilted_loss(losses: &[f64], cfg: TiltConfig) -> f64 {
    let scaled: Vec<f64> = losses.iter().map(|l| cfg.tau * l).collect();
    log_sum_exp(&scaled) / cfg.tau
}

/// Absolute difference between the dual objective at `y*` and
/// `log Σ e^{τL_k}`.
pub fn duality_gap(losses: &[f64], cfg: TiltConfig) -> f64 {
    let tau = cfg.tau;
    let y = tilt_weights(losses, cfg);
    let entropy_term: f64 = y
        .iter()
        .map(|&yk| {
            let p = yk / tau;
            if p > 0.0 {
                p * p.ln()
            } else {
                0.0
            }
        })
        .sum();
    let linear: f64 = y.iter().zip(losses).map(|(yk, l)| yk * l).sum();
    let scaled: Vec<f64> = losses.iter().map(|l| tau * l).collect();
    (linear - entropy_term - log_sum_exp(&scaled)).abs()
}
