//! Shared value types. All of them are plain immutable data; the algorithms
//! live in the sibling modules.

use crate::error::{PikeError, Result};
use std::ops::Deref;

/// Absolute tolerance on `|Σw - 1|`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// True iff `w` is a nonempty vector of nonnegative finite reals summing to one.
pub fn validate_simplex(w: &[f64]) -> bool {
    if w.is_empty() || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return false;
    }
    (w.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
}

/// Sampling proportions over K tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if validate_simplex(&w) {
            Ok(SimplexWeights(w))
        } else {
            Err(PikeError::invalid(format!("not a point of the simplex: {w:?}")))
        }
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1, "uniform weights need at least one task");
        SimplexWeights(vec![1.0 / k as f64; k])
    }

    /// Normalizes a nonnegative vector with positive finite mass.
    pub fn normalized(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(PikeError::invalid(format!("cannot normalize {w:?}")));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(PikeError::invalid(format!("cannot normalize {w:?}")));
        }
        Ok(SimplexWeights(w.into_iter().map(|x| x / total).collect()))
    }

    /// Vertex `e_k` of the K-simplex.
    pub fn vertex(k: usize, index: usize) -> Self {
        let mut w = vec![0.0; k];
        w[index] = 1.0;
        SimplexWeights(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SimplexWeights {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Integer sample counts per task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    counts: Vec<usize>,
    total: usize,
}

impl BatchPlan {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        let total = counts.iter().sum();
        if counts.is_empty() || total == 0 {
            return Err(PikeError::invalid("batch plan needs at least one sample"));
        }
        Ok(BatchPlan { counts, total })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn num_tasks(&self) -> usize {
        self.counts.len()
    }

    /// Realized proportions `b_k / b`.
    pub fn proportions(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }
}

/// Statistics for one task at the current iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskStat {
    pub loss_hat: f64,
    /// Bias-corrected and clamped estimate of `‖∇L_k‖²`.
    pub grad_norm_sq_hat: f64,
    /// `‖ḡ‖²` without correction.
    pub grad_norm_sq_raw: f64,
    /// `‖ḡ‖² - var_hat/n` before clamping; equals the clamped value for exact stats.
    pub grad_norm_sq_unclamped: f64,
    pub var_hat: f64,
    /// `None` when the numbers come from closed forms.
    pub n_samples: Option<usize>,
}

impl TaskStat {
    pub fn exact(loss: f64, grad_norm_sq: f64, sigma_sq: f64) -> Self {
        TaskStat {
            loss_hat: loss,
            grad_norm_sq_hat: grad_norm_sq,
            grad_norm_sq_raw: grad_norm_sq,
            grad_norm_sq_unclamped: grad_norm_sq,
            var_hat: sigma_sq,
            n_samples: None,
        }
    }
}

/// Per-task statistics, indexed by task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGradStats(pub Vec<TaskStat>);

impl TaskGradStats {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn grad_norm_sq(&self) -> Vec<f64> {
        self.0.iter().map(|s| s.grad_norm_sq_hat).collect()
    }

    pub fn var(&self) -> Vec<f64> {
        self.0.iter().map(|s| s.var_hat).collect()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.0.iter().map(|s| s.loss_hat).collect()
    }

    /// Builds stats from raw per-task arrays, treating them as exact.
    pub fn from_exact(losses: &[f64], grad_norm_sq: &[f64], sigma_sq: &[f64]) -> Self {
        TaskGradStats(
            losses
                .iter()
                .zip(grad_norm_sq)
                .zip(sigma_sq)
                .map(|((&l, &g), &s)| TaskStat::exact(l, g, s))
                .collect(),
        )
    }
}

impl Deref for TaskGradStats {
    type Target = [TaskStat];

    fn deref(&self) -> &[TaskStat] {
        &self.0
    }
}

/// Pairwise interaction diagnostics for a set of task gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictProfile {
    pub cosine: Vec<Vec<f64>>,
    pub ratio: Vec<Vec<f64>>,
    pub c_under: f64,
    pub c_over: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Flat model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(PikeError::invalid("parameter vector must have d >= 1"));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(PikeError::invalid("parameter vector has non-finite entries"));
        }
        Ok(ParamVector(theta))
    }

    pub fn zeros(d: usize) -> Self {
        ParamVector(vec![0.0; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One logged training step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub step: usize,
    pub weights: SimplexWeights,
    pub plan: BatchPlan,
    pub per_task_loss: Vec<f64>,
    pub stats: TaskGradStats,
    pub conflict: ConflictProfile,
    pub total_loss: f64,
    pub tilted_loss: Option<f64>,
    /// Whether the weights were recomputed at this step.
    pub updated: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_examples() {
        assert!(validate_simplex(&[0.5, 0.5]));
        assert!(validate_simplex(&[0.42, 0.06, 0.28, 0.02, 0.20, 0.02]));
        assert!(!validate_simplex(&[0.6, 0.6]));
        assert!(!validate_simplex(&[]));
        assert!(!validate_simplex(&[1.5, -0.5]));
        assert!(!validate_simplex(&[f64::NAN, 1.0]));
    }

    #[test]
    fn tolerance_is_absolute_on_the_sum() {
        assert!(validate_simplex(&[0.5, 0.5 + 0.9e-9]));
        assert!(!validate_simplex(&[0.5, 0.5 + 1.1e-9]));
    }

    #[test]
    fn plan_rejects_empty_mass() {
        assert!(BatchPlan::new(vec![0, 0]).is_err());
        assert!(BatchPlan::new(vec![]).is_err());
        let p = BatchPlan::new(vec![3, 1]).unwrap();
        assert_eq!(p.total(), 4);
        assert_eq!(p.proportions(), vec![0.75, 0.25]);
    }

    #[test]
    fn param_vector_checks() {
        assert!(ParamVector::new(vec![]).is_err());
        assert!(ParamVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(ParamVector::new(vec![1.0, 2.0]).unwrap().dim(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalization_is_idempotent(raw in prop::collection::vec(0.0f64..10.0, 1..64)) {
                prop_assume!(raw.iter().sum::<f64>() > 1e-6);
                let w = SimplexWeights::normalized(raw).unwrap();
                prop_assert!(validate_simplex(&w));
                let again = SimplexWeights::normalized(w.clone().into_vec()).unwrap();
                prop_assert!(validate_simplex(&again));
            }
        }
    }
}
