//! Parameter updates: plain SGD and AdamW with clipping and a warmup/decay
//! schedule.

use crate::error::{PikeError, Result};
use serde::{Deserialize, Serialize};

pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adamw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub eta_peak: f64,
    pub eta_init_final: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub clip_norm: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::sgd(0.1, 0)
    }
}

impl OptimizerConfig {
    /// Constant-stepsize SGD.
    pub fn sgd(eta: f64, total_steps: usize) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            eta_peak: eta,
            eta_init_final: eta,
            warmup_steps: 0,
            total_steps,
            beta1: 0.95,
            beta2: 0.98,
            weight_decay: 0.0,
            clip_norm: None,
        }
    }

    /// AdamW with the large-scale defaults (β = 0.95/0.98, decay 0.01, clip 1).
    pub fn adamw(eta_peak: f64, eta_init_final: f64, warmup_steps: usize, total_steps: usize) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adamw,
            eta_peak,
            eta_init_final,
            warmup_steps,
            total_steps,
            beta1: 0.95,
            beta2: 0.98,
            weight_decay: 0.01,
            clip_norm: Some(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_peak > 0.0 && self.eta_peak.is_finite()) {
            return Err(PikeError::config("optimizer.eta_peak", "must be positive"));
        }
        if !(self.eta_init_final >= 0.0 && self.eta_init_final.is_finite()) {
            return Err(PikeError::config("optimizer.eta_init_final", "must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(PikeError::config("optimizer.beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(PikeError::config("optimizer.beta2", "must lie in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(PikeError::config("optimizer.weight_decay", "must be nonnegative"));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(PikeError::config("optimizer.clip_norm", "must be positive"));
            }
        }
        if self.warmup_steps > self.total_steps {
            return Err(PikeError::config("optimizer.warmup_steps", "exceeds total_steps"));
        }
        Ok(())
    }
}

/// Linear warmup from `eta_init_final` to `eta_peak`, then linear decay back.
/// Steps past `total_steps` stay at `eta_init_final`.
pub fn lr_at(cfg: &OptimizerConfig, step: usize) -> f64 {
    let (lo, hi) = (cfg.eta_init_final, cfg.eta_peak);
    if step < cfg.warmup_steps {
        return lo + (hi - lo) * step as f64 / cfg.warmup_steps as f64;
    }
    let decay = cfg.total_steps.saturating_sub(cfg.warmup_steps);
    if decay == 0 {
        return if step == cfg.warmup_steps { hi } else { lo };
    }
    let frac = ((step - cfg.warmup_steps) as f64 / decay as f64).min(1.0);
    hi + (lo - hi) * frac
}

/// `θ - ηg`.
pub fn sgd_step(theta: &mut [f64], grad: &[f64], eta: f64) -> Result<()> {
    if theta.len() != grad.len() {
        return Err(PikeError::DimensionMismatch {
            expected: theta.len(),
            got: grad.len(),
        });
    }
    for (t, g) in theta.iter_mut().zip(grad) {
        *t -= eta * g;
    }
    Ok(())
}

/// Rescales `grad` in place to norm `max_norm` if it exceeds it; returns the factor.
pub fn clip_grad(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
        s
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Number of updates applied so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }
}

/// One AdamW update at schedule position `step`; clips `grad` first.
pub fn adamw_step(
    state: &mut AdamState,
    theta: &mut [f64],
    grad: &[f64],
    cfg: &OptimizerConfig,
    step: usize,
) -> Result<()> {
    if theta.len() != grad.len() || state.m.len() != theta.len() {
        return Err(PikeError::DimensionMismatch {
            expected: theta.len(),
            got: grad.len(),
        });
    }
    let mut g = grad.to_vec();
    if let Some(c) = cfg.clip_norm {
        clip_grad(&mut g, c);
    }
    let eta = lr_at(cfg, step);
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for i in 0..theta.len() {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        theta[i] -= eta * (m_hat / (v_hat.sqrt() + ADAM_EPS) + cfg.weight_decay * theta[i]);
    }
    Ok(())
}

/// Owns the per-run optimizer state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    adam: Option<AdamState>,
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig, dim: usize) -> Self {
        let adam = (cfg.kind == OptimizerKind::Adamw).then(|| AdamState::new(dim));
        Optimizer { cfg, adam }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], step: usize) -> Result<()> {
        match &mut self.adam {
            Some(state) => adamw_step(state, theta, grad, &self.cfg, step),
            None => {
                let eta = lr_at(&self.cfg, step);
                match self.cfg.clip_norm {
                    Some(c) => {
                        let mut g = grad.to_vec();
                        clip_grad(&mut g, c);
                        sgd_step(theta, &g, eta)
                    }
                    None => sgd_step(theta, grad, eta),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::TaskSpec;

    #[test]
    fn schedule_examples() {
        let cfg = OptimizerConfig::adamw(7e-4, 7e-6, 10_000, 100_000);
        assert_eq!(lr_at(&cfg, 0), 7e-6);
        assert_eq!(lr_at(&cfg, 10_000), 7e-4);
        assert!((lr_at(&cfg, 5000) - 3.535e-4).abs() < 1e-15);
        assert!((lr_at(&cfg, 100_000) - 7e-6).abs() < 1e-18);
        assert!((lr_at(&cfg, 55_000) - (7e-4 + 0.5 * (7e-6 - 7e-4))).abs() < 1e-15);
        let flat = OptimizerConfig::sgd(0.3, 50);
        assert!((0..=50).all(|s| lr_at(&flat, s) == 0.3));
    }

    #[test]
    fn sgd_examples() {
        let mut t = vec![1.0, 1.0];
        sgd_step(&mut t, &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(t, vec![0.5, 1.0]);
        sgd_step(&mut t, &[3.0, 2.0], 0.0).unwrap();
        assert_eq!(t, vec![0.5, 1.0]);
        let task = TaskSpec::axis(0, 1.0, 0.0, 2).unwrap();
        let mut t = vec![1.0, 0.0];
        let g = task.exact_grad(&t).unwrap();
        sgd_step(&mut t, &g, 1.0).unwrap();
        assert_eq!(t, vec![0.0, 0.0]);
        assert!(sgd_step(&mut t, &[1.0], 1.0).is_err());
    }

    #[test]
    fn sgd_monotone_gradient_decrease() {
        let task = TaskSpec::axis(1, 3.0, 0.0, 3).unwrap();
        let mut t = vec![0.5, 2.0, -1.0];
        let mut prev = f64::INFINITY;
        for _ in 0..50 {
            let g = task.exact_grad(&t).unwrap();
            let n = g.iter().map(|x| x * x).sum::<f64>();
            assert!(n < prev || n == 0.0);
            prev = n;
            sgd_step(&mut t, &g, 0.6).unwrap();
        }
    }

    #[test]
    fn adamw_examples() {
        let mut cfg = OptimizerConfig::adamw(0.1, 0.1, 0, 10);
        cfg.weight_decay = 0.0;
        cfg.clip_norm = None;
        let mut s = AdamState::new(1);
        let mut t = vec![1.0];
        adamw_step(&mut s, &mut t, &[1.0], &cfg, 0).unwrap();
        assert!((t[0] - (1.0 - 0.1 / (1.0 + 1e-8))).abs() < 1e-15);
        assert!((t[0] - 0.9).abs() < 1e-6);

        let mut s = AdamState::new(2);
        let mut t = vec![1.0, -2.0];
        adamw_step(&mut s, &mut t, &[0.0, 0.0], &cfg, 0).unwrap();
        assert_eq!(t, vec![1.0, -2.0]);
    }

    #[test]
    fn clipping() {
        let mut g = vec![6.0, 8.0];
        assert_eq!(clip_grad(&mut g, 1.0), 0.1);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut g = vec![0.3, 0.4];
        assert_eq!(clip_grad(&mut g, 1.0), 1.0);
        assert_eq!(g, vec![0.3, 0.4]);
    }

    #[test]
    fn config_checks() {
        assert!(OptimizerConfig::adamw(7e-4, 7e-6, 10, 100).validate().is_ok());
        let mut c = OptimizerConfig::sgd(0.1, 10);
        c.beta1 = 1.0;
        assert!(c.validate().is_err());
        assert!(OptimizerConfig::sgd(0.0, 10).validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn clipping_never_grows(g in prop::collection::vec(-100.0f64..100.0, 1..10), c in 1e-3f64..50.0) {
                let before = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut h = g.clone();
                clip_grad(&mut h, c);
                let after = h.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(after <= before + 1e-12);
                if before <= c {
                    prop_assert_eq!(h, g);
                }
            }
        }
    }
}
