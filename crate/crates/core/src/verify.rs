//! Property suites with Monte-Carlo and brute-force oracles.
//!
//! Each suite returns one or more [`Check`]s; `all` concatenates them.

use crate::error::{PikeError, Result};
use crate::example1::{run_example1, Example1Config};
use crate::mixer::{
    duality_gap, solve_simplex_qp, tilt_weights, KktCoefficients, PikeConfig, TiltConfig,
    TiltPower,
};
use crate::optim::OptimizerConfig;
use crate::rng::{stream, Purpose, StreamRng};
use crate::sampling::StrategyConfig;
use crate::stats::{
    conflict_profile, estimate_task_stats, exact_task_stats, norm_sq, sum_of_norms_bound,
    total_norm_bound,
};
use crate::tasks::{total_smoothness, RandomQuadraticParams, TaskSpec};
use crate::trainer::{
    descent_bound_rhs, hitting_time, pike_budget, run_balanced_pike, run_baseline,
    run_conceptual_pike, run_pike, ConceptualConfig, StatsMode,
};
use crate::types::{BatchPlan, SimplexWeights};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Kkt,
    Descent,
    Tightness,
    Example1,
    Duality,
    Lemmas,
    Convergence,
    Balanced,
    Estimator,
    Determinism,
    All,
}

impl Suite {
    pub const EACH: [Suite; 10] = [
        Suite::Kkt,
        Suite::Descent,
        Suite::Tightness,
        Suite::Example1,
        Suite::Convergence,
        Suite::Duality,
        Suite::Lemmas,
        Suite::Balanced,
        Suite::Estimator,
        Suite::Determinism,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Kkt => "kkt",
            Suite::Descent => "descent",
            Suite::Tightness => "tightness",
            Suite::Example1 => "example1",
            Suite::Duality => "duality",
            Suite::Lemmas => "lemmas",
            Suite::Convergence => "convergence",
            Suite::Balanced => "balanced",
            Suite::Estimator => "estimator",
            Suite::Determinism => "determinism",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = PikeError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| PikeError::invalid(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Kkt => vec![kkt(seed)],
        Suite::Descent => vec![descent(seed)?],
        Suite::Tightness => tightness(seed)?,
        Suite::Example1 => vec![example1(seed)?],
        Suite::Duality => vec![duality(seed)],
        Suite::Lemmas => vec![lemmas(seed)?],
        Suite::Convergence => convergence(seed)?,
        Suite::Balanced => vec![balanced(seed)?],
        Suite::Estimator => vec![estimator(seed)?],
        Suite::Determinism => vec![determinism(seed)?],
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::EACH {
                out.extend(run_suite(s, seed)?);
            }
            out
        }
    })
}

fn inst_rng(seed: u64, index: u64) -> StreamRng {
    stream(seed, Purpose::Instance, index, 0)
}

fn gauss(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Smallest objective over the simplex grid with spacing `1/n` (K ≤ 3).
pub fn grid_minimum(c: &KktCoefficients, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    match c.len() {
        1 => c.objective(&[1.0]),
        2 => (0..=n)
            .map(|i| c.objective(&[i as f64 * h, 1.0 - i as f64 * h]))
            .fold(f64::INFINITY, f64::min),
        3 => (0..=n)
            .flat_map(|i| (0..=n - i).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (a, b) = (i as f64 * h, j as f64 * h);
                c.objective(&[a, b, (1.0 - a - b).max(0.0)])
            })
            .fold(f64::INFINITY, f64::min),
        _ => panic!("grid oracle supports K <= 3"),
    }
}

/// Solver against a 1e-3 simplex grid on 100 random instances.
pub fn kkt(seed: u64) -> Check {
    let worst = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut r = inst_rng(seed, i);
            let k = if i % 2 == 0 { 2 } else { 3 };
            let lambda = (0..k).map(|_| r.random_range(-5.0..5.0)).collect();
            let kappa = (0..k).map(|_| 5.0 - r.random_range(0.0..5.0)).collect();
            let c = KktCoefficients::new(lambda, kappa).expect("finite");
            let w = solve_simplex_qp(&c).expect("K >= 1");
            c.objective(&w) - grid_minimum(&c, 1000)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Check::new(
        "kkt solver optimality",
        worst <= 1e-6,
        format!("max(solver - grid) = {worst:.3e} over 100 instances"),
    )
}

/// Monte-Carlo mean and standard error of the total loss after one mixed
/// SGD step from `theta`.
pub fn one_step_loss(
    tasks: &[TaskSpec],
    theta: &[f64],
    plan: &BatchPlan,
    eta: f64,
    draws: usize,
    rng: &mut StreamRng,
) -> Result<(f64, f64)> {
    let d = theta.len();
    let mut g = vec![0.0; d];
    let mut next = vec![0.0; d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let scale = eta / plan.total() as f64;
    for _ in 0..draws {
        g.iter_mut().for_each(|x| *x = 0.0);
        for (t, &c) in tasks.iter().zip(plan.counts()) {
            if c > 0 {
                t.accumulate_batch(theta, c, rng, &mut g)?;
            }
        }
        for i in 0..d {
            next[i] = theta[i] - scale * g[i];
        }
        let loss: f64 = tasks.iter().map(|t| t.loss_unchecked(&next)).sum();
        sum += loss;
        sum_sq += loss * loss;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Bound right-hand side from exact statistics, with β, γ measured from the
/// exact gradients and `plan`, and `L` the smoothness of the summed loss.
pub fn bound_rhs(tasks: &[TaskSpec], theta: &[f64], plan: &BatchPlan, eta: f64) -> Result<f64> {
    let est = tasks
        .iter()
        .map(|t| exact_task_stats(t, theta))
        .collect::<Result<Vec<_>>>()?;
    let grads: Vec<Vec<f64>> = est.iter().map(|e| e.mean_grad.clone()).collect();
    let prof = conflict_profile(&grads, plan)?;
    let g2: Vec<f64> = est.iter().map(|e| e.stat.grad_norm_sq_hat).collect();
    let s2: Vec<f64> = tasks.iter().map(|t| t.exact_sigma_sq()).collect();
    let loss: f64 = est.iter().map(|e| e.stat.loss_hat).sum();
    Ok(descent_bound_rhs(
        loss,
        &g2,
        &s2,
        plan,
        eta,
        prof.beta,
        prof.gamma,
        total_smoothness(tasks),
    ))
}

fn random_plan(k: usize, b: usize, r: &mut StreamRng) -> BatchPlan {
    // every task gets at least one sample, the rest uniformly at random
    let mut counts = vec![1usize; k];
    for _ in k..b {
        counts[r.random_range(0..k)] += 1;
    }
    BatchPlan::new(counts).expect("b >= k >= 1")
}

struct DescentCase {
    tasks: Vec<TaskSpec>,
    theta: Vec<f64>,
    plan: BatchPlan,
    eta: f64,
}

fn descent_case(seed: u64, i: u64) -> Result<DescentCase> {
    let mut r = inst_rng(seed, 1000 + i);
    let k = r.random_range(2..=4usize);
    let d = r.random_range(2..=5usize);
    let axis_family = i % 3 == 2;
    let mut tasks = Vec::with_capacity(k);
    for _ in 0..k {
        let l = r.random_range(0.5..2.0);
        let s2 = r.random_range(0.0..3.0);
        tasks.push(if axis_family {
            TaskSpec::axis(r.random_range(0..d), l, s2, d)?
        } else {
            TaskSpec::random(RandomQuadraticParams::generate(d, l, s2, 1.0, &mut r)?)?
        });
    }
    let theta = (0..d).map(|_| gauss(&mut r)).collect();
    let b = r.random_range(k..=12usize);
    let plan = random_plan(k, b, &mut r);
    let eta = r.random_range(0.02..1.5) / total_smoothness(&tasks);
    Ok(DescentCase { tasks, theta, plan, eta })
}

pub const DESCENT_DRAWS: usize = 100_000;

/// 200 random configurations; MC mean ≤ RHS + 3 SE in at least 99%.
pub fn descent(seed: u64) -> Result<Check> {
    let results = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let c = descent_case(seed, i)?;
            let rhs = bound_rhs(&c.tasks, &c.theta, &c.plan, c.eta)?;
            let mut r = stream(seed, Purpose::MonteCarlo, 1000 + i, 0);
            let (mean, se) = one_step_loss(&c.tasks, &c.theta, &c.plan, c.eta, DESCENT_DRAWS, &mut r)?;
            Ok((mean <= rhs + 3.0 * se, (mean - rhs) / se.max(f64::MIN_POSITIVE)))
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = results.iter().filter(|x| x.0).count();
    let worst = results.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Check::new(
        "descent bound validity",
        ok * 100 >= 99 * results.len(),
        format!("{ok}/{} configurations within MC slack; max (mean-rhs)/se = {worst:.2}", results.len()),
    ))
}

/// Axis family with `k` tasks on distinct axes of `R^d` and a common `L`.
fn axis_case(seed: u64, i: u64, k: usize, d: usize) -> Result<DescentCase> {
    let mut r = inst_rng(seed, 5000 + i);
    let l = r.random_range(0.5..2.0);
    let mut axes: Vec<usize> = (0..d).collect();
    for j in 0..k {
        let pick = r.random_range(j..d);
        axes.swap(j, pick);
    }
    let tasks = (0..k)
        .map(|j| TaskSpec::axis(axes[j], l, r.random_range(0.5..2.0), d))
        .collect::<Result<Vec<_>>>()?;
    let theta = (0..d).map(|_| gauss(&mut r)).collect();
    let b = r.random_range(k..=16usize);
    let plan = random_plan(k, b, &mut r);
    let eta = r.random_range(0.05..1.0) / l;
    Ok(DescentCase { tasks, theta, plan, eta })
}

/// Gap between the bound and the exact expectation on the axis family:
/// noise off the task axes adds to the bound but not to the loss.
fn axis_bound_gap(c: &DescentCase) -> f64 {
    let d = c.theta.len() as f64;
    let k = c.tasks.len() as f64;
    let b = c.plan.total() as f64;
    let l = c.tasks[0].smoothness();
    let noise: f64 = c
        .tasks
        .iter()
        .zip(c.plan.counts())
        .map(|(t, &n)| n as f64 * t.exact_sigma_sq())
        .sum();
    0.5 * l * c.eta * c.eta * (1.0 - k / d) * noise / (b * b)
}

fn tightness_run(seed: u64, k: usize, d: usize, offset: u64) -> Result<(usize, f64, f64)> {
    let res = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let c = axis_case(seed, offset + i, k, d)?;
            let rhs = bound_rhs(&c.tasks, &c.theta, &c.plan, c.eta)?;
            let mut r = stream(seed, Purpose::MonteCarlo, 5000 + offset + i, 0);
            let (mean, se) = one_step_loss(&c.tasks, &c.theta, &c.plan, c.eta, DESCENT_DRAWS, &mut r)?;
            Ok(((mean - rhs).abs() / se, axis_bound_gap(&c) / se))
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = res.iter().filter(|x| x.0 <= 3.0).count();
    let worst = res.iter().map(|x| x.0).fold(0.0, f64::max);
    let gap = res.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok((ok, worst, gap))
}

/// Two-sided equality on the axis family: K = 3 in d = 10 as required, plus
/// the full-coverage case K = d = 3 for reference.
pub fn tightness(seed: u64) -> Result<Vec<Check>> {
    let (ok, worst, gap) = tightness_run(seed, 3, 10, 0)?;
    let (ok_full, worst_full, _) = tightness_run(seed, 3, 3, 100)?;
    Ok(vec![
        Check::new(
            "descent bound tightness (K=3, d=10)",
            ok == 20,
            format!(
                "{ok}/20 draws with |mean-rhs| <= 3 se; max |mean-rhs|/se = {worst:.2}; \
                 predicted off-axis noise gap up to {gap:.2} se"
            ),
        ),
        Check::new(
            "descent bound tightness (K=d=3)",
            ok_full == 20,
            format!("{ok_full}/20 draws with |mean-rhs| <= 3 se; max |mean-rhs|/se = {worst_full:.2}"),
        ),
    ])
}

pub fn example1(seed: u64) -> Result<Check> {
    let res = run_example1(&Example1Config {
        seed,
        ..Default::default()
    })?;
    let (adaptive, best) = res.final_comparison();
    let z = res.final_z_max();
    Ok(Check::new(
        "two-task example: adaptive beats static",
        adaptive <= best && z <= 3.0,
        format!("adaptive {adaptive:.5} vs best static {best:.5}; max final |mc-analytic|/se = {z:.2}"),
    ))
}

pub fn duality(seed: u64) -> Check {
    let mut r = inst_rng(seed, 9000);
    let (mut worst_gap, mut worst_sum) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let k = r.random_range(1..=10usize);
        let losses: Vec<f64> = (0..k).map(|_| r.random_range(-10.0..10.0)).collect();
        let tau = 10f64.powf(r.random_range(-2.0..1.0));
        let cfg = TiltConfig::new(tau).expect("tau > 0");
        let scaled: Vec<f64> = losses.iter().map(|l| l * tau).collect();
        let m = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + scaled.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        worst_gap = worst_gap.max(duality_gap(&losses, cfg) / lse.abs().max(1.0));
        let y = tilt_weights(&losses, cfg);
        worst_sum = worst_sum.max((y.iter().sum::<f64>() - tau).abs());
    }
    Check::new(
        "tilted duality",
        worst_gap <= 1e-9 && worst_sum <= 1e-12,
        format!("max relative gap {worst_gap:.2e}; max |sum y - tau| {worst_sum:.2e} over 1000 draws"),
    )
}

/// Both correlation inequalities and the cosine-to-ratio implication on 1000
/// random gradient sets.
pub fn lemmas(seed: u64) -> Result<Check> {
    let mut r = inst_rng(seed, 9500);
    let (mut first_checked, mut fails) = (0usize, 0usize);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let k = r.random_range(2..=6usize);
        let d = r.random_range(1..=6usize);
        let shared: Vec<f64> = (0..d).map(|_| gauss(&mut r)).collect();
        let align = r.random_range(0.0..3.0);
        let grads: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|j| align * shared[j] + gauss(&mut r)).collect())
            .collect();
        let plan = BatchPlan::new(vec![1; k])?;
        let p = conflict_profile(&grads, &plan)?;
        let sum: Vec<f64> = (0..d).map(|j| grads.iter().map(|g| g[j]).sum()).collect();
        let total = norm_sq(&sum);
        let deltas: Vec<f64> = grads.iter().map(|g| norm_sq(g)).collect();
        let sum_norms: f64 = deltas.iter().sum();
        if let Some(bound) = sum_of_norms_bound(total, p.c_under, k) {
            first_checked += 1;
            let excess = (sum_norms - bound) / bound.abs().max(1e-300);
            worst = worst.max(excess);
            if excess > 1e-9 {
                fails += 1;
            }
        }
        let bound = total_norm_bound(&deltas, p.c_over);
        let excess = (total - bound) / bound.abs().max(1e-300);
        worst = worst.max(excess);
        if excess > 1e-9 {
            fails += 1;
        }
        let c_tilde = (0..k)
            .flat_map(|j| (0..k).filter(move |&l| l != j).map(move |l| (j, l)))
            .map(|(j, l)| -p.cosine[j][l])
            .fold(0.0f64, f64::max);
        if p.c_under > c_tilde / 2.0 + 1e-12 {
            fails += 1;
        }
    }
    Ok(Check::new(
        "correlation-of-losses inequalities",
        fails == 0,
        format!(
            "{fails} violations; first inequality applicable on {first_checked}/1000 sets; \
             max relative excess {worst:.2e}"
        ),
    ))
}

fn orthogonal_axis_instance(seed: u64, i: u64) -> Result<(Vec<TaskSpec>, Vec<f64>)> {
    let mut r = inst_rng(seed, 7000 + i);
    let k = r.random_range(2..=4usize);
    let l = r.random_range(0.5..2.0);
    let tasks = (0..k)
        .map(|j| TaskSpec::axis(j, l, r.random_range(0.0..4.0), k))
        .collect::<Result<Vec<_>>>()?;
    let theta = (0..k).map(|_| r.random_range(-1.0..1.0)).collect();
    Ok((tasks, theta))
}

pub const CONVERGENCE_DELTA: f64 = 0.01;
pub const CONVERGENCE_BATCH: usize = 16;

/// Hitting time of the conceptual method with oracle statistics and the
/// budgeted step size; returns `(hit, T̄, η)`.
pub fn conceptual_hit(tasks: &[TaskSpec], theta0: &[f64], seed: u64) -> Result<(Option<usize>, u64, f64)> {
    let est = tasks
        .iter()
        .map(|t| exact_task_stats(t, theta0))
        .collect::<Result<Vec<_>>>()?;
    let grads: Vec<Vec<f64>> = est.iter().map(|e| e.mean_grad.clone()).collect();
    let k = tasks.len();
    let plan = crate::sampling::round_plan(&SimplexWeights::uniform(k), CONVERGENCE_BATCH);
    let prof = conflict_profile(&grads, &plan)?;
    let l = total_smoothness(tasks);
    let gap: f64 = est.iter().map(|e| e.stat.loss_hat).sum();
    let s2: Vec<f64> = tasks.iter().map(|t| t.exact_sigma_sq()).collect();
    let budget = pike_budget(CONVERGENCE_DELTA, gap, l, &s2, CONVERGENCE_BATCH, prof.beta, prof.gamma)?;
    let cfg = ConceptualConfig {
        b: CONVERGENCE_BATCH,
        eta: budget.eta,
        beta: prof.beta,
        gamma: prof.gamma,
        smoothness: l,
        mode: StatsMode::Oracle,
        remeasure: false,
    };
    let rec = run_conceptual_pike(tasks, theta0, &cfg, budget.t_bar as usize + 1, seed)?;
    Ok((hitting_time(&rec, CONVERGENCE_DELTA), budget.t_bar, budget.eta))
}

/// Asymmetric-noise comparison: mean hitting time of the conceptual method
/// and of uniform mixing at the same step size, over `seeds` runs.
pub fn asymmetric_hitting(seeds: u64, base: u64) -> Result<(f64, f64)> {
    let tasks = vec![TaskSpec::axis(0, 1.0, 9.0, 2)?, TaskSpec::axis(1, 1.0, 0.01, 2)?];
    let theta0 = [1.0, 0.5];
    let res = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let seed = base.wrapping_add(s);
            let (hit, t_bar, eta) = conceptual_hit(&tasks, &theta0, seed)?;
            let cap = t_bar as usize + 1;
            let opt = OptimizerConfig::sgd(eta, cap);
            let uni = StrategyConfig::Mix(SimplexWeights::uniform(2));
            let rec = run_baseline(&tasks, &theta0, &uni, CONVERGENCE_BATCH, &opt, cap, seed)?;
            let u = hitting_time(&rec, CONVERGENCE_DELTA).unwrap_or(cap);
            Ok((hit.unwrap_or(cap) as f64, u as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = res.len() as f64;
    Ok((res.iter().map(|x| x.0).sum::<f64>() / n, res.iter().map(|x| x.1).sum::<f64>() / n))
}

pub fn convergence(seed: u64) -> Result<Vec<Check>> {
    let hits = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let (tasks, theta0) = orthogonal_axis_instance(seed, i)?;
            let (hit, t_bar, _) = conceptual_hit(&tasks, &theta0, seed.wrapping_add(i))?;
            Ok(hit.is_some_and(|t| t as u64 <= t_bar))
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = hits.iter().filter(|x| **x).count();
    let (pike, uniform) = asymmetric_hitting(50, seed.wrapping_mul(1000))?;
    Ok(vec![
        Check::new(
            "conceptual convergence within budget",
            ok == 20,
            format!("{ok}/20 instances reach max_k |grad_k|^2 <= 0.01 within the budget"),
        ),
        Check::new(
            "adaptive vs uniform hitting time",
            pike <= uniform,
            format!("mean hitting time {pike:.1} (adaptive) vs {uniform:.1} (uniform) over 50 seeds"),
        ),
    ])
}

/// Final `|L₁ - L₂|` on a two-task instance with very different curvatures,
/// for plain adaptive mixing (`tau = None`) and the tilted variant.
pub fn balance_gap(tau: Option<f64>, seed: u64) -> Result<f64> {
    let tasks = vec![TaskSpec::axis(0, 2.0, 0.01, 2)?, TaskSpec::axis(1, 0.1, 0.01, 2)?];
    let theta0 = [1.0, 4.0];
    let cfg = PikeConfig {
        zeta1: 1.0,
        zeta2: 0.0,
        t0: 10,
        b: 32,
        w_min: 1e-6,
    };
    let steps = 200;
    let opt = OptimizerConfig::sgd(0.2, steps);
    let rec = match tau {
        None => run_pike(&tasks, &theta0, &cfg, &opt, steps, None, StatsMode::default(), seed)?,
        Some(t) => run_balanced_pike(
            &tasks,
            &theta0,
            &cfg,
            TiltConfig::new(t)?,
            TiltPower::Squared,
            &opt,
            steps,
            None,
            StatsMode::default(),
            seed,
        )?,
    };
    let last = rec.last().expect("steps > 0");
    Ok((last.per_task_loss[0] - last.per_task_loss[1]).abs())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn balanced(seed: u64) -> Result<Check> {
    let settings = [None, Some(1.0), Some(3.0), Some(5.0)];
    let medians = settings
        .iter()
        .map(|&tau| {
            let gaps = (0..10u64)
                .map(|s| balance_gap(tau, seed.wrapping_mul(100).wrapping_add(s)))
                .collect::<Result<Vec<_>>>()?;
            Ok(median(gaps))
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = medians.windows(2).all(|w| w[1] <= w[0]);
    Ok(Check::new(
        "balanced mixing equalizes task losses",
        ok,
        format!(
            "median final |L1-L2|: plain {:.4}, tau=1 {:.4}, tau=3 {:.4}, tau=5 {:.4}",
            medians[0], medians[1], medians[2], medians[3]
        ),
    ))
}

pub fn estimator(seed: u64) -> Result<Check> {
    let task = TaskSpec::axis(0, 1.0, 4.0, 2)?;
    let theta = [1.0, 0.0];
    let reps = 10_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in 0..reps {
        let mut r = stream(seed, Purpose::Estimate, 0, i as u64);
        let v = estimate_task_stats(&task, &theta, 16, &mut r)?.stat.grad_norm_sq_unclamped;
        sum += v;
        sum_sq += v * v;
    }
    let n = reps as f64;
    let mean = sum / n;
    let se = ((sum_sq - n * mean * mean) / (n - 1.0) / n).sqrt();
    let z = (mean - 1.0).abs() / se;
    let mut r = stream(seed, Purpose::Estimate, 1, 0);
    let var = estimate_task_stats(&task, &theta, 100_000, &mut r)?.stat.var_hat;
    let rel = (var - 4.0).abs() / 4.0;
    Ok(Check::new(
        "gradient statistic estimator",
        z <= 3.0 && rel <= 0.05,
        format!("corrected norm mean {mean:.4} (|z| = {z:.2}); variance {var:.4} ({:.2}% off)", rel * 100.0),
    ))
}

pub fn determinism(seed: u64) -> Result<Check> {
    let cfg = crate::config::RunConfig::demo(seed);
    let a = crate::commands::render_run(&cfg)?;
    let b = crate::commands::render_run(&cfg)?;
    let same = a == b && !a.is_empty();
    Ok(Check::new(
        "determinism",
        same,
        format!("{} bytes of CSV, identical across two runs: {same}", a.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn grid_minimum_two_d() {
        let c = KktCoefficients::new(vec![-2.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!((grid_minimum(&c, 1000) - (-1.5)).abs() < 1e-12);
    }

    #[test]
    fn axis_gap_vanishes_with_full_coverage() {
        let c = axis_case(0, 0, 3, 3).unwrap();
        assert_eq!(axis_bound_gap(&c), 0.0);
        let c = axis_case(0, 0, 3, 10).unwrap();
        assert!(axis_bound_gap(&c) > 0.0);
    }

    /// Exact expectation of the next loss on the axis family, computed
    /// coordinate by coordinate, equals the bound minus the off-axis gap.
    #[test]
    fn axis_bound_minus_gap_is_exact() {
        for i in 0..10 {
            let c = axis_case(3, i, 3, 10).unwrap();
            let b = c.plan.total() as f64;
            let d = c.theta.len() as f64;
            let noise: f64 = c
                .tasks
                .iter()
                .zip(c.plan.counts())
                .map(|(t, &n)| n as f64 * t.exact_sigma_sq() / d)
                .sum::<f64>()
                / (b * b);
            let mut exact = 0.0;
            for (t, &n) in c.tasks.iter().zip(c.plan.counts()) {
                let TaskSpec::AxisQuadratic(p) = t else { unreachable!() };
                let th = c.theta[p.axis_index];
                let mean = th - c.eta * n as f64 / b * p.smoothness * th;
                exact += 0.5 * p.smoothness * (mean * mean + c.eta * c.eta * noise);
            }
            let rhs = bound_rhs(&c.tasks, &c.theta, &c.plan, c.eta).unwrap();
            assert!((rhs - axis_bound_gap(&c) - exact).abs() < 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn one_step_noiseless_is_deterministic() {
        let tasks = vec![TaskSpec::axis(0, 1.0, 0.0, 2).unwrap(), TaskSpec::axis(1, 1.0, 0.0, 2).unwrap()];
        let plan = BatchPlan::new(vec![1, 1]).unwrap();
        let mut r = stream(0, Purpose::MonteCarlo, 0, 0);
        let (m, se) = one_step_loss(&tasks, &[1.0, 1.0], &plan, 0.5, 10, &mut r).unwrap();
        // each coordinate shrinks by 1 - 0.5·0.5
        assert!((m - 0.75f64.powi(2)).abs() < 1e-15);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn fast_suites_pass() {
        for s in [Suite::Kkt, Suite::Duality, Suite::Lemmas] {
            for c in run_suite(s, 1).unwrap() {
                assert!(c.passed, "{c}");
            }
        }
    }
}
