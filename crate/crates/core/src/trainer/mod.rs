//! Training loops for the adaptive mixers and static baselines.
//!
//! Every loop logs one [`TrainRecord`] per step, describing the iterate
//! *before* that step's update. Randomness is keyed by `(seed, purpose, task,
//! step)`, so runs replay bit for bit.

mod budget;

pub use budget::{descent_bound_rhs, pike_budget, ConvergenceBudget};

use crate::error::{PikeError, Result};
use crate::mixer::{
    balanced_pike_update_with, kkt_coefficients, pike_update, solve_simplex_qp, tilted_loss,
    PikeConfig, TiltConfig, TiltPower,
};
use crate::optim::{Optimizer, OptimizerConfig};
use crate::rng::{stream, Purpose};
use crate::sampling::{floor_plan_for_estimation, round_plan, strategy_plan, StrategyConfig, DEFAULT_MIN_PER_TASK};
use crate::stats::{conflict_profile, estimate_task_stats, exact_task_stats, TaskEstimate};
use crate::tasks::TaskSpec;
use crate::types::{BatchPlan, SimplexWeights, TaskGradStats, TrainRecord};

/// Where per-task statistics come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsMode {
    /// Closed-form gradients and variances.
    Oracle,
    /// Sample estimates; each task gets `max(b_k, min_per_task)` draws.
    Estimated { min_per_task: usize },
}

impl Default for StatsMode {
    fn default() -> Self {
        StatsMode::Estimated {
            min_per_task: DEFAULT_MIN_PER_TASK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConceptualConfig {
    pub b: usize,
    pub eta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub smoothness: f64,
    pub mode: StatsMode,
    /// Replace `beta`/`gamma` each step by values measured from the current
    /// gradients and the previous plan.
    pub remeasure: bool,
}

struct Run<'a> {
    tasks: &'a [TaskSpec],
    theta: Vec<f64>,
    seed: u64,
    tilt: Option<TiltConfig>,
    grad_buf: Vec<f64>,
}

impl<'a> Run<'a> {
    fn new(tasks: &'a [TaskSpec], theta0: &[f64], seed: u64) -> Result<Self> {
        let first = tasks
            .first()
            .ok_or_else(|| PikeError::invalid("need at least one task"))?;
        let d = first.dim();
        if let Some(t) = tasks.iter().find(|t| t.dim() != d) {
            return Err(PikeError::DimensionMismatch {
                expected: d,
                got: t.dim(),
            });
        }
        if theta0.len() != d {
            return Err(PikeError::DimensionMismatch {
                expected: d,
                got: theta0.len(),
            });
        }
        if theta0.iter().any(|x| !x.is_finite()) {
            return Err(PikeError::invalid("theta0 has non-finite entries"));
        }
        Ok(Run {
            tasks,
            theta: theta0.to_vec(),
            seed,
            tilt: None,
            grad_buf: vec![0.0; d],
        })
    }

    fn k(&self) -> usize {
        self.tasks.len()
    }

    fn exact(&self) -> Result<Vec<TaskEstimate>> {
        self.tasks
            .iter()
            .map(|t| exact_task_stats(t, &self.theta))
            .collect()
    }

    fn stats(&self, mode: StatsMode, plan: &BatchPlan, step: usize) -> Result<Vec<TaskEstimate>> {
        match mode {
            StatsMode::Oracle => self.exact(),
            StatsMode::Estimated { min_per_task } => {
                let sizes = floor_plan_for_estimation(plan, min_per_task.max(2));
                self.tasks
                    .iter()
                    .zip(sizes.counts())
                    .enumerate()
                    .map(|(k, (t, &n))| {
                        let mut rng = stream(self.seed, Purpose::Estimate, k as u64, step as u64);
                        estimate_task_stats(t, &self.theta, n, &mut rng)
                    })
                    .collect()
            }
        }
    }

    fn record(
        &self,
        step: usize,
        weights: &SimplexWeights,
        plan: &BatchPlan,
        est: &[TaskEstimate],
        updated: bool,
    ) -> Result<TrainRecord> {
        let per_task_loss: Vec<f64> = self
            .tasks
            .iter()
            .map(|t| t.exact_expected_loss(&self.theta))
            .collect::<Result<_>>()?;
        let grads: Vec<Vec<f64>> = est.iter().map(|e| e.mean_grad.clone()).collect();
        Ok(TrainRecord {
            step,
            weights: weights.clone(),
            plan: plan.clone(),
            total_loss: per_task_loss.iter().sum(),
            tilted_loss: self.tilt.map(|c| tilted_loss(&per_task_loss, c)),
            per_task_loss,
            stats: TaskGradStats(est.iter().map(|e| e.stat).collect()),
            conflict: conflict_profile(&grads, plan)?,
            updated,
        })
    }

    /// Samples the mixed batch for `step` and returns its averaged gradient.
    fn batch_grad(&mut self, plan: &BatchPlan, step: usize) -> Result<&[f64]> {
        self.grad_buf.iter_mut().for_each(|g| *g = 0.0);
        for (k, (t, &c)) in self.tasks.iter().zip(plan.counts()).enumerate() {
            if c == 0 {
                continue;
            }
            let mut rng = stream(self.seed, Purpose::Train, k as u64, step as u64);
            t.accumulate_batch(&self.theta, c, &mut rng, &mut self.grad_buf)?;
        }
        let inv = 1.0 / plan.total() as f64;
        self.grad_buf.iter_mut().for_each(|g| *g *= inv);
        Ok(&self.grad_buf)
    }

    fn apply(&mut self, opt: &mut Optimizer, plan: &BatchPlan, step: usize) -> Result<()> {
        self.batch_grad(plan, step)?;
        let grad = std::mem::take(&mut self.grad_buf);
        let res = opt.step(&mut self.theta, &grad, step);
        self.grad_buf = grad;
        res?;
        if self.theta.iter().any(|x| !x.is_finite()) {
            return Err(PikeError::invalid(format!("iterate diverged at step {step}")));
        }
        Ok(())
    }
}

fn check_weights(w: &SimplexWeights, k: usize) -> Result<()> {
    if w.len() != k {
        return Err(PikeError::DimensionMismatch {
            expected: k,
            got: w.len(),
        });
    }
    Ok(())
}

/// Per-step exact minimization of the relaxed descent bound, then SGD.
pub fn run_conceptual_pike(
    tasks: &[TaskSpec],
    theta0: &[f64],
    cfg: &ConceptualConfig,
    steps: usize,
    seed: u64,
) -> Result<Vec<TrainRecord>> {
    if cfg.b == 0 || !(cfg.eta > 0.0) || !(cfg.smoothness > 0.0) {
        return Err(PikeError::invalid("conceptual run needs b >= 1, eta > 0, L > 0"));
    }
    let mut run = Run::new(tasks, theta0, seed)?;
    let mut opt = Optimizer::new(OptimizerConfig::sgd(cfg.eta, steps.max(1)), theta0.len());
    let mut plan = round_plan(&SimplexWeights::uniform(run.k()), cfg.b);
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        let est = run.stats(cfg.mode, &plan, step)?;
        let stats = TaskGradStats(est.iter().map(|e| e.stat).collect());
        let (beta, gamma) = if cfg.remeasure {
            let grads: Vec<Vec<f64>> = est.iter().map(|e| e.mean_grad.clone()).collect();
            let p = conflict_profile(&grads, &plan)?;
            (p.beta, p.gamma)
        } else {
            (cfg.beta, cfg.gamma)
        };
        let coeffs = kkt_coefficients(&stats, cfg.eta, beta, gamma, cfg.smoothness, cfg.b)?;
        let w = solve_simplex_qp(&coeffs)?;
        plan = round_plan(&w, cfg.b);
        out.push(run.record(step, &w, &plan, &est, true)?);
        run.apply(&mut opt, &plan, step)?;
    }
    Ok(out)
}

/// How the adaptive loop turns statistics into new weights.
#[derive(Debug, Clone, Copy)]
enum Update {
    Plain,
    Balanced(TiltConfig, TiltPower),
}

#[allow(clippy::too_many_arguments)]
fn run_interval_loop(
    tasks: &[TaskSpec],
    theta0: &[f64],
    cfg: &PikeConfig,
    update: Update,
    optimizer: &OptimizerConfig,
    steps: usize,
    init: Option<&SimplexWeights>,
    mode: StatsMode,
    seed: u64,
) -> Result<Vec<TrainRecord>> {
    cfg.validate()?;
    optimizer.validate()?;
    let mut run = Run::new(tasks, theta0, seed)?;
    let k = run.k();
    let mut w = match init {
        Some(w) => {
            check_weights(w, k)?;
            w.clone()
        }
        None => SimplexWeights::uniform(k),
    };
    if let Update::Balanced(t, _) = update {
        run.tilt = Some(t);
    }
    let mut opt = Optimizer::new(*optimizer, theta0.len());
    let mut plan = round_plan(&w, cfg.b);
    let mut est = Vec::new();
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        let updated = step % cfg.t0 == 0;
        if updated {
            est = run.stats(mode, &plan, step)?;
            let stats = TaskGradStats(est.iter().map(|e| e.stat).collect());
            w = match update {
                Update::Plain => pike_update(&w, &stats, cfg)?,
                Update::Balanced(t, p) => {
                    balanced_pike_update_with(&w, &stats, &stats.losses(), t, cfg, p)?
                }
            };
            plan = round_plan(&w, cfg.b);
        }
        out.push(run.record(step, &w, &plan, &est, updated)?);
        run.apply(&mut opt, &plan, step)?;
    }
    Ok(out)
}

/// Multiplicative weight updates every `cfg.t0` steps (including step 0).
#[allow(clippy::too_many_arguments)]
pub fn run_pike(
    tasks: &[TaskSpec],
    theta0: &[f64],
    cfg: &PikeConfig,
    optimizer: &OptimizerConfig,
    steps: usize,
    init_weights: Option<&SimplexWeights>,
    mode: StatsMode,
    seed: u64,
) -> Result<Vec<TrainRecord>> {
    run_interval_loop(tasks, theta0, cfg, Update::Plain, optimizer, steps, init_weights, mode, seed)
}

/// As [`run_pike`] with tilt-weighted exponents; losses come from the same
/// estimation batch as the gradient statistics.
#[allow(clippy::too_many_arguments)]
pub fn run_balanced_pike(
    tasks: &[TaskSpec],
    theta0: &[f64],
    cfg: &PikeConfig,
    tilt: TiltConfig,
    power: TiltPower,
    optimizer: &OptimizerConfig,
    steps: usize,
    init_weights: Option<&SimplexWeights>,
    mode: StatsMode,
    seed: u64,
) -> Result<Vec<TrainRecord>> {
    run_interval_loop(
        tasks,
        theta0,
        cfg,
        Update::Balanced(tilt, power),
        optimizer,
        steps,
        init_weights,
        mode,
        seed,
    )
}

/// Static strategies. Logged statistics are the closed-form values.
pub fn run_baseline(
    tasks: &[TaskSpec],
    theta0: &[f64],
    strategy: &StrategyConfig,
    b: usize,
    optimizer: &OptimizerConfig,
    steps: usize,
    seed: u64,
) -> Result<Vec<TrainRecord>> {
    optimizer.validate()?;
    if b == 0 {
        return Err(PikeError::invalid("batch size must be at least 1"));
    }
    let mut run = Run::new(tasks, theta0, seed)?;
    let k = run.k();
    if let StrategyConfig::Mix(w) = strategy {
        check_weights(w, k)?;
    }
    let mut opt = Optimizer::new(*optimizer, theta0.len());
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        let mut rng = stream(seed, Purpose::Strategy, 0, step as u64);
        let plan = strategy_plan(strategy, step, k, b, &mut rng)?;
        let w = match strategy {
            StrategyConfig::Mix(w) => w.clone(),
            _ => SimplexWeights::normalized(plan.proportions())?,
        };
        let est = run.exact()?;
        out.push(run.record(step, &w, &plan, &est, false)?);
        run.apply(&mut opt, &plan, step)?;
    }
    Ok(out)
}

/// First logged step whose largest per-task squared gradient norm is at most
/// `delta`. Meaningful when the records carry exact statistics.
pub fn hitting_time(records: &[TrainRecord], delta: f64) -> Option<usize> {
    records
        .iter()
        .find(|r| r.stats.iter().map(|s| s.grad_norm_sq_hat).fold(0.0, f64::max) <= delta)
        .map(|r| r.step)
}

#[cfg(test)]
mod tests;
