use super::*;
use crate::mixer::example1_optimal_w;

fn axis_pair(sigma: [f64; 2], l: [f64; 2]) -> Vec<TaskSpec> {
    vec![
        TaskSpec::axis(0, l[0], sigma[0], 2).unwrap(),
        TaskSpec::axis(1, l[1], sigma[1], 2).unwrap(),
    ]
}

fn losses(r: &[TrainRecord]) -> Vec<Vec<f64>> {
    r.iter().map(|x| x.per_task_loss.clone()).collect()
}

fn oracle_cfg(b: usize, eta: f64) -> ConceptualConfig {
    ConceptualConfig {
        b,
        eta,
        beta: 1.0,
        gamma: 1.0,
        smoothness: 1.0,
        mode: StatsMode::Oracle,
        remeasure: false,
    }
}

#[test]
fn conceptual_symmetric_family_stays_uniform() {
    let tasks = axis_pair([1.0, 1.0], [1.0, 1.0]);
    let rec = run_conceptual_pike(&tasks, &[1.0, 1.0], &oracle_cfg(8, 0.1), 20, 3).unwrap();
    // later steps see asymmetric noise, so only step 0 is exactly symmetric
    assert_eq!(rec[0].weights.as_slice(), &[0.5, 0.5]);
    let quiet = axis_pair([0.0, 0.0], [1.0, 1.0]);
    let rec = run_conceptual_pike(&quiet, &[1.0, 1.0], &oracle_cfg(8, 0.1), 20, 3).unwrap();
    assert!(rec.iter().all(|r| r.weights.as_slice() == [0.5, 0.5]));
}

#[test]
fn conceptual_tracks_two_task_closed_form() {
    // per-coordinate noise s² per task means total variance 2s² in d = 2
    let (s1, s2, eta, b) = (4.0, 1.0, 0.1, 4usize);
    let tasks = axis_pair([2.0 * s1, 2.0 * s2], [1.0, 1.0]);
    let rec = run_conceptual_pike(&tasks, &[1.0, 1.0], &oracle_cfg(b, eta), 50, 9).unwrap();
    for r in &rec {
        let t1 = (2.0 * r.per_task_loss[0]).sqrt();
        let t2 = (2.0 * r.per_task_loss[1]).sqrt();
        let w = example1_optimal_w(t1, t2, s1, s2, eta, b);
        assert!((r.weights[0] - w).abs() < 1e-9, "step {}: {} vs {w}", r.step, r.weights[0]);
    }
}

#[test]
fn conceptual_single_task_is_sgd() {
    let tasks = vec![TaskSpec::axis(0, 1.0, 1.0, 2).unwrap()];
    let a = run_conceptual_pike(&tasks, &[1.0, -1.0], &oracle_cfg(4, 0.2), 30, 1).unwrap();
    let mix = StrategyConfig::Mix(SimplexWeights::uniform(1));
    let b = run_baseline(&tasks, &[1.0, -1.0], &mix, 4, &OptimizerConfig::sgd(0.2, 30), 30, 1).unwrap();
    assert_eq!(losses(&a), losses(&b));
    assert!(a.iter().all(|r| r.weights.as_slice() == [1.0]));
}

#[test]
fn conceptual_empirical_and_remeasure_run() {
    let tasks = axis_pair([1.0, 4.0], [1.0, 0.5]);
    let cfg = ConceptualConfig {
        mode: StatsMode::default(),
        remeasure: true,
        ..oracle_cfg(16, 0.1)
    };
    let rec = run_conceptual_pike(&tasks, &[1.0, 1.0], &cfg, 40, 5).unwrap();
    assert_eq!(rec.len(), 40);
    assert!(rec[39].total_loss < rec[0].total_loss);
}

#[test]
fn zero_zeta_matches_static_mix() {
    let tasks = axis_pair([1.0, 2.0], [1.0, 0.5]);
    let init = SimplexWeights::new(vec![0.3, 0.7]).unwrap();
    let cfg = PikeConfig {
        zeta1: 0.0,
        zeta2: 0.0,
        t0: 5,
        b: 16,
        w_min: 0.0,
    };
    let opt = OptimizerConfig::sgd(0.1, 60);
    let a = run_pike(&tasks, &[1.0, 1.0], &cfg, &opt, 60, Some(&init), StatsMode::default(), 4).unwrap();
    let mix = StrategyConfig::Mix(init.clone());
    let b = run_baseline(&tasks, &[1.0, 1.0], &mix, 16, &opt, 60, 4).unwrap();
    assert_eq!(losses(&a), losses(&b));
}

#[test]
fn skewed_prior_is_accepted() {
    let tasks: Vec<TaskSpec> = (0..6).map(|k| TaskSpec::axis(k, 1.0, 1.0, 6).unwrap()).collect();
    let skewed = SimplexWeights::new(vec![0.42, 0.06, 0.28, 0.02, 0.20, 0.02]).unwrap();
    let cfg = PikeConfig {
        zeta1: 0.0,
        zeta2: 0.0,
        t0: 10,
        b: 256,
        w_min: 0.0,
    };
    let opt = OptimizerConfig::sgd(0.05, 20);
    let rec = run_pike(&tasks, &[1.0; 6], &cfg, &opt, 20, Some(&skewed), StatsMode::default(), 0).unwrap();
    for (a, b) in rec[0].weights.iter().zip(skewed.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(rec[0].plan.counts(), &[108, 15, 72, 5, 51, 5]);
    let bad = SimplexWeights::uniform(5);
    assert!(run_pike(&tasks, &[1.0; 6], &cfg, &opt, 2, Some(&bad), StatsMode::default(), 0).is_err());
}

#[test]
fn update_count_follows_interval() {
    let tasks = axis_pair([1.0, 1.0], [1.0, 1.0]);
    let cfg = PikeConfig {
        t0: 1000,
        b: 8,
        ..Default::default()
    };
    let opt = OptimizerConfig::sgd(0.01, 3000);
    let rec = run_pike(&tasks, &[1.0, 1.0], &cfg, &opt, 3000, None, StatsMode::default(), 2).unwrap();
    assert_eq!(rec.len(), 3000);
    let steps: Vec<usize> = rec.iter().filter(|r| r.updated).map(|r| r.step).collect();
    assert_eq!(steps, vec![0, 1000, 2000]);
    // plan constant between updates
    for r in &rec {
        assert_eq!(r.plan, rec[r.step / 1000 * 1000].plan);
    }
}

#[test]
fn balanced_equal_tasks_match_plain() {
    let tasks = axis_pair([1.0, 1.0], [1.0, 1.0]);
    let cfg = PikeConfig {
        t0: 3,
        b: 16,
        ..Default::default()
    };
    let opt = OptimizerConfig::sgd(0.1, 30);
    let tilt = TiltConfig::new(2.0).unwrap();
    let quiet = axis_pair([0.0, 0.0], [1.0, 1.0]);
    let a = run_pike(&quiet, &[1.0, 1.0], &cfg, &opt, 30, None, StatsMode::Oracle, 1).unwrap();
    let b = run_balanced_pike(&quiet, &[1.0, 1.0], &cfg, tilt, TiltPower::Squared, &opt, 30, None, StatsMode::Oracle, 1)
        .unwrap();
    assert_eq!(losses(&a), losses(&b));
    assert!(a.iter().all(|r| r.tilted_loss.is_none()));
    assert!(b.iter().all(|r| r.tilted_loss.is_some()));
    let c = run_balanced_pike(&tasks, &[1.0, 1.0], &cfg, tilt, TiltPower::Linear, &opt, 30, None, StatsMode::default(), 1);
    assert!(c.is_ok());
}

#[test]
fn balanced_small_tau_damps_updates() {
    let tasks = axis_pair([1.0, 1.0], [2.0, 0.1]);
    let cfg = PikeConfig {
        zeta1: 1.0,
        zeta2: 0.0,
        t0: 1,
        b: 16,
        w_min: 0.0,
    };
    let opt = OptimizerConfig::sgd(0.1, 20);
    let tiny = TiltConfig::new(1e-4).unwrap();
    let rec = run_balanced_pike(&tasks, &[1.0, 4.0], &cfg, tiny, TiltPower::Squared, &opt, 20, None, StatsMode::Oracle, 0)
        .unwrap();
    assert!(rec.iter().all(|r| (r.weights[0] - 0.5).abs() < 1e-6));
}

#[test]
fn baselines() {
    let quiet = axis_pair([0.0, 0.0], [1.0, 1.0]);
    let opt = OptimizerConfig::sgd(0.1, 25);
    let mix = StrategyConfig::Mix(SimplexWeights::uniform(2));
    let rec = run_baseline(&quiet, &[1.0, -1.0], &mix, 8, &opt, 25, 0).unwrap();
    for r in &rec {
        assert_eq!(r.per_task_loss[0], r.per_task_loss[1]);
    }
    let rec = run_baseline(&quiet, &[1.0, -1.0], &StrategyConfig::RoundRobin, 8, &opt, 25, 0).unwrap();
    for r in &rec {
        assert_eq!(r.plan.counts()[r.step % 2], 8);
    }
    let rec = run_baseline(&quiet, &[1.0, -1.0], &StrategyConfig::Random, 8, &opt, 25, 0).unwrap();
    for r in &rec {
        assert!(r.plan.counts().contains(&8));
        assert_eq!(r.weights.iter().sum::<f64>(), 1.0);
    }
}

#[test]
fn records_are_deterministic() {
    let tasks = axis_pair([1.0, 3.0], [1.0, 0.3]);
    let cfg = PikeConfig {
        t0: 4,
        b: 12,
        ..Default::default()
    };
    let opt = OptimizerConfig::adamw(0.05, 0.001, 5, 40);
    let a = run_pike(&tasks, &[1.0, 2.0], &cfg, &opt, 40, None, StatsMode::default(), 77).unwrap();
    let b = run_pike(&tasks, &[1.0, 2.0], &cfg, &opt, 40, None, StatsMode::default(), 77).unwrap();
    assert_eq!(a, b);
    let c = run_pike(&tasks, &[1.0, 2.0], &cfg, &opt, 40, None, StatsMode::default(), 78).unwrap();
    assert_ne!(a, c);
}

#[test]
fn total_loss_is_sum_of_task_losses() {
    let tasks = axis_pair([1.0, 3.0], [1.0, 0.3]);
    let rec = run_conceptual_pike(&tasks, &[1.0, 2.0], &oracle_cfg(8, 0.1), 10, 0).unwrap();
    for r in rec {
        assert!((r.total_loss - r.per_task_loss.iter().sum::<f64>()).abs() <= 1e-9);
    }
}

#[test]
fn hitting_time_on_noiseless_run() {
    let quiet = axis_pair([0.0, 0.0], [1.0, 1.0]);
    let rec = run_conceptual_pike(&quiet, &[1.0, 1.0], &oracle_cfg(8, 0.5), 40, 0).unwrap();
    let t = hitting_time(&rec, 0.01).unwrap();
    let r = &rec[t];
    assert!(r.stats.iter().all(|s| s.grad_norm_sq_hat <= 0.01));
    assert!(rec[..t].iter().all(|r| r.stats.iter().any(|s| s.grad_norm_sq_hat > 0.01)));
}

#[test]
fn rejects_bad_inputs() {
    let tasks = axis_pair([1.0, 1.0], [1.0, 1.0]);
    let opt = OptimizerConfig::sgd(0.1, 5);
    assert!(run_baseline(&[], &[1.0], &StrategyConfig::Random, 4, &opt, 5, 0).is_err());
    assert!(run_baseline(&tasks, &[1.0], &StrategyConfig::Random, 4, &opt, 5, 0).is_err());
    let cfg = PikeConfig { t0: 0, ..Default::default() };
    assert!(run_pike(&tasks, &[1.0, 1.0], &cfg, &opt, 5, None, StatsMode::default(), 0).is_err());
}
