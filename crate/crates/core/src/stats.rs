//! Per-task gradient statistics and pairwise conflict/alignment diagnostics.

use crate::error::{PikeError, Result};
use crate::rng::StreamRng;
use crate::tasks::TaskSpec;
use crate::types::{BatchPlan, ConflictProfile, TaskStat};

/// Streaming mean / scatter of gradient vectors (Welford).
#[derive(Debug, Clone)]
pub struct GradAccumulator {
    n: usize,
    mean: Vec<f64>,
    scatter: f64,
    loss_sum: f64,
}

impl GradAccumulator {
    pub fn new(dim: usize) -> Self {
        GradAccumulator {
            n: 0,
            mean: vec![0.0; dim],
            scatter: 0.0,
            loss_sum: 0.0,
        }
    }

    pub fn push(&mut self, grad: &[f64], loss: f64) {
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for (m, &g) in self.mean.iter_mut().zip(grad) {
            let delta = g - *m;
            *m += delta * inv;
            self.scatter += delta * (g - *m);
        }
        self.loss_sum += loss;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Stats with the `‖ḡ‖² - var/n` correction; needs at least two samples.
    pub fn finish(&self) -> Result<TaskStat> {
        if self.n < 2 {
            return Err(PikeError::invalid("variance estimate needs n >= 2"));
        }
        let n = self.n as f64;
        let var_hat = self.scatter / (n - 1.0);
        let raw = norm_sq(&self.mean);
        let unclamped = raw - var_hat / n;
        Ok(TaskStat {
            loss_hat: self.loss_sum / n,
            grad_norm_sq_hat: unclamped.max(0.0),
            grad_norm_sq_raw: raw,
            grad_norm_sq_unclamped: unclamped,
            var_hat,
            n_samples: Some(self.n),
        })
    }
}

/// Statistics plus the mean gradient they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEstimate {
    pub stat: TaskStat,
    pub mean_grad: Vec<f64>,
}

/// Statistics of an explicit set of per-sample gradients.
pub fn stats_from_samples(grads: &[Vec<f64>], losses: &[f64]) -> Result<TaskEstimate> {
    let dim = grads.first().map_or(0, |g| g.len());
    let mut acc = GradAccumulator::new(dim);
    for (g, &l) in grads.iter().zip(losses) {
        if g.len() != dim {
            return Err(PikeError::DimensionMismatch {
                expected: dim,
                got: g.len(),
            });
        }
        acc.push(g, l);
    }
    Ok(TaskEstimate {
        stat: acc.finish()?,
        mean_grad: acc.mean().to_vec(),
    })
}

/// Draws `n` samples from `task` at `theta` and summarizes them.
pub fn estimate_task_stats(
    task: &TaskSpec,
    theta: &[f64],
    n: usize,
    rng: &mut StreamRng,
) -> Result<TaskEstimate> {
    if n < 2 {
        return Err(PikeError::invalid("estimate_task_stats needs n >= 2"));
    }
    let mut acc = GradAccumulator::new(theta.len());
    task.for_each_sample(theta, n, rng, |g, l| acc.push(g, l))?;
    Ok(TaskEstimate {
        stat: acc.finish()?,
        mean_grad: acc.mean().to_vec(),
    })
}

/// Closed-form statistics.
pub fn exact_task_stats(task: &TaskSpec, theta: &[f64]) -> Result<TaskEstimate> {
    let grad = task.exact_grad(theta)?;
    Ok(TaskEstimate {
        stat: TaskStat::exact(
            task.exact_expected_loss(theta)?,
            norm_sq(&grad),
            task.exact_sigma_sq(),
        ),
        mean_grad: grad,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `β = min_k (1 + c̲(2 - K - b/b_k))` over tasks with `b_k > 0`.
pub fn beta_from(c_under: f64, plan: &BatchPlan) -> Result<f64> {
    let k = plan.num_tasks() as f64;
    let b = plan.total() as f64;
    plan.counts()
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| 1.0 + c_under * (2.0 - k - b / c as f64))
        .reduce(f64::min)
        .ok_or_else(|| PikeError::invalid("beta needs a plan with at least one sample"))
}

/// `γ = 1 + c̄ (K - 1)`.
pub fn gamma_from(c_over: f64, k: usize) -> f64 {
    1.0 + c_over * (k.saturating_sub(1)) as f64
}

/// Pairwise cosine and ratio matrices, worst-case `c̲`/`c̄` over off-diagonal
/// pairs, and the descent constants for `plan`.
pub fn conflict_profile(mean_grads: &[Vec<f64>], plan: &BatchPlan) -> Result<ConflictProfile> {
    let k = mean_grads.len();
    if k == 0 {
        return Err(PikeError::invalid("conflict profile needs at least one task"));
    }
    if plan.num_tasks() != k {
        return Err(PikeError::DimensionMismatch {
            expected: k,
            got: plan.num_tasks(),
        });
    }
    let dim = mean_grads[0].len();
    if let Some(bad) = mean_grads.iter().find(|g| g.len() != dim) {
        return Err(PikeError::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let norms: Vec<f64> = mean_grads.iter().map(|g| norm_sq(g)).collect();
    let mut cosine = vec![vec![0.0; k]; k];
    let mut ratio = vec![vec![0.0; k]; k];
    let (mut c_under, mut c_over) = (0.0f64, 0.0f64);
    for j in 0..k {
        cosine[j][j] = if norms[j] > 0.0 { 1.0 } else { 0.0 };
        ratio[j][j] = if norms[j] > 0.0 { 0.5 } else { 0.0 };
        for l in (j + 1)..k {
            let inner = dot(&mean_grads[j], &mean_grads[l]);
            let denom = (norms[j] * norms[l]).sqrt();
            let cos = if denom > 0.0 {
                (inner / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            let sum = norms[j] + norms[l];
            let r = if sum > 0.0 { inner / sum } else { 0.0 };
            cosine[j][l] = cos;
            cosine[l][j] = cos;
            ratio[j][l] = r;
            ratio[l][j] = r;
            c_under = c_under.max(-r);
            c_over = c_over.max(cos);
        }
    }
    Ok(ConflictProfile {
        cosine,
        ratio,
        c_under,
        c_over,
        beta: beta_from(c_under, plan)?,
        gamma: gamma_from(c_over, k),
    })
}

/// Upper bound on `Σ_k ‖g_k‖²` given `‖Σ g_k‖²`; `None` unless `c̲ < 1/(2(K-1))`.
pub fn sum_of_norms_bound(total_norm_sq: f64, c_under: f64, k: usize) -> Option<f64> {
    let denom = 1.0 - 2.0 * c_under * k.saturating_sub(1) as f64;
    (denom > 0.0).then(|| total_norm_sq / denom)
}

/// Upper bound on `‖Σ g_k‖²` from per-task bounds `δ_k` and alignment `c̄`.
pub fn total_norm_bound(deltas: &[f64], c_over: f64) -> f64 {
    let sum: f64 = deltas.iter().sum();
    let root: f64 = deltas.iter().map(|d| d.sqrt()).sum();
    (1.0 - c_over) * sum + c_over * root * root
}
