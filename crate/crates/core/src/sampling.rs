//! Batch composition: weights to integer plans, and the static baselines.

use crate::error::Result;
use crate::rng::StreamRng;
use crate::types::{BatchPlan, SimplexWeights};
use rand::Rng;

/// Default per-task floor used when a plan feeds statistic estimation.
pub const DEFAULT_MIN_PER_TASK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyConfig {
    /// Fixed proportions in every batch.
    Mix(SimplexWeights),
    /// Whole batch from one task drawn uniformly at random.
    Random,
    /// Whole batch from task `step mod K`.
    RoundRobin,
    /// Weights supplied by an adaptive mixer each step.
    Adaptive,
}

/// Largest-remainder rounding of `b·w`; leftover units go to the largest
/// fractional parts, ties to the lowest task index.
pub fn round_plan(w: &SimplexWeights, b: usize) -> BatchPlan {
    assert!(b >= 1, "round_plan needs b >= 1");
    let scaled: Vec<f64> = w.iter().map(|&x| x * b as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let leftover = b.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // stable sort keeps lower indices first among equal remainders
    order.sort_by(|&i, &j| {
        let ri = scaled[i] - counts[i] as f64;
        let rj = scaled[j] - counts[j] as f64;
        rj.partial_cmp(&ri).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &k in order.iter().cycle().take(leftover) {
        counts[k] += 1;
    }
    BatchPlan::new(counts).expect("b >= 1 so the plan has mass")
}

/// Plan for the given strategy at `step`. `Adaptive` has no plan of its own
/// and falls back to uniform.
pub fn strategy_plan(
    cfg: &StrategyConfig,
    step: usize,
    k: usize,
    b: usize,
    rng: &mut StreamRng,
) -> Result<BatchPlan> {
    assert!(k >= 1 && b >= 1);
    let one_hot = |i: usize| {
        let mut c = vec![0; k];
        c[i] = b;
        BatchPlan::new(c)
    };
    match cfg {
        StrategyConfig::Mix(w) => {
            if w.len() != k {
                return Err(crate::PikeError::DimensionMismatch {
                    expected: k,
                    got: w.len(),
                });
            }
            Ok(round_plan(w, b))
        }
        StrategyConfig::Random => one_hot(rng.random_range(0..k)),
        StrategyConfig::RoundRobin => one_hot(step % k),
        StrategyConfig::Adaptive => Ok(round_plan(&SimplexWeights::uniform(k), b)),
    }
}

/// Raises every count to at least `min_per_task`; the total grows accordingly.
pub fn floor_plan_for_estimation(plan: &BatchPlan, min_per_task: usize) -> BatchPlan {
    let counts = plan
        .counts()
        .iter()
        .map(|&c| c.max(min_per_task))
        .collect();
    BatchPlan::new(counts).expect("floored plan keeps its mass")
}
