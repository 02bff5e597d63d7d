//! Subcommand bodies shared by the binary and the tests.

use crate::config::{MethodConfig, RunConfig};
use crate::error::{PikeError, Result};
use crate::example1::{run_example1, Example1Config};
use crate::mixer::{tilted_loss, PikeConfig};
use crate::report::{fmt_f64, records_to_csv};
use crate::sampling::StrategyConfig;
use crate::trainer::{
    run_balanced_pike, run_baseline, run_conceptual_pike, run_pike, ConceptualConfig,
};
use crate::tasks::total_smoothness;
use crate::types::{SimplexWeights, TrainRecord};
use crate::verify::{run_suite, Suite};
use rayon::prelude::*;
use std::path::Path;

/// Trains according to `cfg` and returns the per-step records.
pub fn train(cfg: &RunConfig) -> Result<Vec<TrainRecord>> {
    cfg.validate()?;
    let tasks = cfg.build_tasks()?;
    let theta0 = cfg.theta0();
    let init = |w: &Option<Vec<f64>>| w.clone().map(SimplexWeights::new).transpose();
    let mut records = match &cfg.method {
        MethodConfig::Pike { init_weights, oracle, min_per_task, .. } => {
            let pike = cfg.pike_config()?.expect("pike method");
            let mode = RunConfig::stats_mode(*oracle, *min_per_task);
            let w0 = init(init_weights)?;
            run_pike(&tasks, &theta0, &pike, &cfg.optimizer, cfg.steps, w0.as_ref(), mode, cfg.seed)?
        }
        MethodConfig::Balanced { init_weights, oracle, min_per_task, tilt_power, .. } => {
            let pike = cfg.pike_config()?.expect("balanced method");
            let tilt = cfg.tilt()?.ok_or_else(|| PikeError::config("tau", "required"))?;
            let mode = RunConfig::stats_mode(*oracle, *min_per_task);
            let w0 = init(init_weights)?;
            let power = RunConfig::tilt_power(*tilt_power);
            run_balanced_pike(&tasks, &theta0, &pike, tilt, power, &cfg.optimizer, cfg.steps, w0.as_ref(), mode, cfg.seed)?
        }
        MethodConfig::Conceptual { eta, beta, gamma, smoothness, oracle, remeasure, min_per_task } => {
            let smoothness = match smoothness {
                Some(l) => *l,
                None => total_smoothness(&tasks),
            };
            let c = ConceptualConfig {
                b: cfg.batch_size,
                eta: *eta,
                beta: *beta,
                gamma: *gamma,
                smoothness,
                mode: RunConfig::stats_mode(*oracle, *min_per_task),
                remeasure: *remeasure,
            };
            run_conceptual_pike(&tasks, &theta0, &c, cfg.steps, cfg.seed)?
        }
        _ => {
            let strategy = cfg.strategy()?.expect("baseline method");
            run_baseline(&tasks, &theta0, &strategy, cfg.batch_size, &cfg.optimizer, cfg.steps, cfg.seed)?
        }
    };
    if let Some(t) = cfg.tilt()? {
        for r in records.iter_mut().filter(|r| r.tilted_loss.is_none()) {
            r.tilted_loss = Some(tilted_loss(&r.per_task_loss, t));
        }
    }
    Ok(records)
}

pub fn render_run(cfg: &RunConfig) -> Result<String> {
    Ok(records_to_csv(&train(cfg)?))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load(config: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn cmd_run(config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let cfg = load(config, seed)?;
    emit(&render_run(&cfg)?, out)
}

/// Every point of the simplex whose coordinates are multiples of `1/(n-1)`,
/// in lexicographic order of the first coordinate ascending.
pub fn simplex_grid(k: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=left {
            prefix.push(i);
            rec(k - 1, left - i, prefix, out);
            prefix.pop();
        }
    }
    let m = n - 1;
    let mut out = Vec::new();
    rec(k, m, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|c| c.into_iter().map(|x| x as f64 / m as f64).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub policy: String,
    pub weights: Vec<f64>,
    pub final_losses: Vec<f64>,
    pub total_loss: f64,
}

/// Per-task losses averaged over the final `tail` fraction of steps.
fn tail_losses(records: &[TrainRecord], tail: f64) -> Vec<f64> {
    let n = ((records.len() as f64 * tail).ceil() as usize).clamp(1, records.len());
    let last = &records[records.len() - n..];
    let k = last[0].per_task_loss.len();
    (0..k)
        .map(|i| last.iter().map(|r| r.per_task_loss[i]).sum::<f64>() / n as f64)
        .collect()
}

/// Final weights and tail losses of one run.
type RunSummary = (Vec<f64>, Vec<f64>);

fn mean_rows(policy: String, runs: Vec<RunSummary>) -> SweepRow {
    let n = runs.len() as f64;
    let k = runs[0].0.len();
    let avg = |pick: fn(&RunSummary) -> &Vec<f64>| -> Vec<f64> {
        (0..k).map(|i| runs.iter().map(|r| pick(r)[i]).sum::<f64>() / n).collect()
    };
    let weights = avg(|r| &r.0);
    let final_losses = avg(|r| &r.1);
    SweepRow {
        policy,
        weights,
        total_loss: final_losses.iter().sum(),
        final_losses,
    }
}

/// Static mixes on a simplex grid plus one adaptive run, all sharing the
/// instance and optimizer of `cfg`. Each policy runs `sweep.repeats` times
/// with seeds `seed, seed + 1, ...`; losses are averaged over the final
/// `sweep.tail_fraction` of steps and then over repeats. The adaptive row
/// reports the mean final weights.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let tasks = cfg.build_tasks()?;
    let theta0 = cfg.theta0();
    let tail = cfg.sweep.tail_fraction;
    let seeds: Vec<u64> = (0..cfg.sweep.repeats as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
    let grid = simplex_grid(tasks.len(), cfg.sweep.grid_points);
    let jobs: Vec<(usize, u64)> = (0..grid.len()).flat_map(|g| seeds.iter().map(move |&s| (g, s))).collect();
    let runs = jobs
        .into_par_iter()
        .map(|(g, seed)| {
            let strategy = StrategyConfig::Mix(SimplexWeights::new(grid[g].clone())?);
            let rec = run_baseline(&tasks, &theta0, &strategy, cfg.batch_size, &cfg.optimizer, cfg.steps, seed)?;
            Ok((grid[g].clone(), tail_losses(&rec, tail)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<SweepRow> = runs
        .chunks(seeds.len())
        .map(|chunk| {
            let w = chunk[0].0.clone();
            let label = format!(
                "mix[{}]",
                w.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(";")
            );
            SweepRow { weights: w, ..mean_rows(label, chunk.to_vec()) }
        })
        .collect();
    let adaptive = match &cfg.method {
        MethodConfig::Pike { .. } | MethodConfig::Balanced { .. } => cfg.clone(),
        _ => {
            let d = PikeConfig::default();
            RunConfig {
                method: MethodConfig::Pike {
                    zeta1: d.zeta1,
                    zeta2: d.zeta2,
                    t0: d.t0,
                    w_min: d.w_min,
                    init_weights: None,
                    oracle: false,
                    min_per_task: crate::sampling::DEFAULT_MIN_PER_TASK,
                },
                ..cfg.clone()
            }
        }
    };
    let label = match adaptive.method {
        MethodConfig::Balanced { .. } => "balanced_pike",
        _ => "pike",
    };
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let rec = train(&RunConfig { seed, ..adaptive.clone() })?;
            let w = rec.last().expect("steps >= 1").weights.to_vec();
            Ok((w, tail_losses(&rec, tail)))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.push(mean_rows(label.to_string(), runs));
    Ok(rows)
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let k = rows.first().map_or(0, |r| r.weights.len());
    let mut cols = vec!["policy".to_string()];
    cols.extend((0..k).map(|i| format!("w_{i}")));
    cols.extend((0..k).map(|i| format!("final_loss_{i}")));
    cols.push("total_loss".into());
    let mut out = cols.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.policy);
        for v in r.weights.iter().chain(&r.final_losses).chain([&r.total_loss]) {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_sweep(config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let cfg = load(config, seed)?;
    emit(&sweep_to_csv(&sweep(&cfg)?), out)
}

/// Prints one line per check; returns whether all passed.
pub fn cmd_verify(suite: Suite, seed: u64) -> Result<bool> {
    let checks = run_suite(suite, seed)?;
    for c in &checks {
        println!("{c}");
    }
    Ok(checks.iter().all(|c| c.passed))
}

pub fn cmd_example1(out: Option<&Path>, seed: u64) -> Result<()> {
    let cfg = Example1Config {
        seed,
        ..Default::default()
    };
    let res = run_example1(&cfg)?;
    let (a, s) = res.final_comparison();
    eprintln!("final loss: adaptive {a:.6}, best static {s:.6}");
    emit(&res.to_csv(), out)
}
