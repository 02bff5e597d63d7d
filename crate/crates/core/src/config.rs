//! JSON run configuration.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "steps": 2000,
//!   "batch_size": 64,
//!   "tasks": [
//!     {"kind": "axis", "axis": 0, "smoothness": 1.0, "sigma_sq": 9.0, "dim": 2},
//!     {"kind": "axis", "axis": 1, "smoothness": 1.0, "sigma_sq": 0.01, "dim": 2}
//!   ],
//!   "optimizer": {"kind": "sgd", "eta_peak": 0.1, "eta_init_final": 0.1},
//!   "method": {"kind": "pike", "zeta1": 0.1, "zeta2": 0.01, "t0": 100}
//! }
//! ```

use crate::error::{PikeError, Result};
use crate::mixer::{PikeConfig, TiltConfig, TiltPower, DEFAULT_W_MIN};
use crate::optim::OptimizerConfig;
use crate::rng::{stream, Purpose};
use crate::sampling::{StrategyConfig, DEFAULT_MIN_PER_TASK};
use crate::tasks::{RandomQuadraticParams, TaskSpec};
use crate::trainer::StatsMode;
use crate::types::SimplexWeights;
use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer};
use std::path::Path;

/// Separates the nested key from the message in errors raised below.
const PATH_MARK: char = '\u{1}';

/// Reads `{"kind": "x", ...fields}` into an enum whose variants are keyed by
/// name, keeping the path of any error inside the variant.
fn from_kind<T: DeserializeOwned, E: serde::de::Error>(v: serde_json::Value) -> std::result::Result<T, E> {
    let serde_json::Value::Object(mut map) = v else {
        return Err(E::custom("expected an object with a `kind` field"));
    };
    let kind = match map.remove("kind") {
        Some(serde_json::Value::String(k)) => k,
        Some(_) => return Err(E::custom(format!("{PATH_MARK}kind{PATH_MARK}must be a string"))),
        None => return Err(E::custom("missing field `kind`")),
    };
    let mut outer = serde_json::Map::new();
    outer.insert(kind, serde_json::Value::Object(map));
    serde_path_to_error::deserialize(serde_json::Value::Object(outer)).map_err(|e| {
        // drop the leading variant segment
        let path = e.path().to_string();
        let inner = path.split_once('.').map_or(String::new(), |(_, rest)| rest.to_string());
        let msg = e.into_inner().to_string();
        if inner.is_empty() {
            E::custom(msg)
        } else {
            E::custom(format!("{PATH_MARK}{inner}{PATH_MARK}{msg}"))
        }
    })
}

fn tagged<'de, D: Deserializer<'de>, T: DeserializeOwned>(d: D) -> std::result::Result<T, D::Error> {
    from_kind(serde_json::Value::deserialize(d)?)
}

fn tagged_seq<'de, D: Deserializer<'de>, T: DeserializeOwned>(d: D) -> std::result::Result<Vec<T>, D::Error> {
    let items = Vec::<serde_json::Value>::deserialize(d)?;
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            from_kind::<T, D::Error>(v).map_err(|e| {
                let text = e.to_string();
                match text.strip_prefix(PATH_MARK) {
                    Some(rest) => D::Error::custom(format!("{PATH_MARK}[{i}].{rest}")),
                    None => D::Error::custom(format!("{PATH_MARK}[{i}]{PATH_MARK}{text}")),
                }
            })
        })
        .collect()
}

fn default_batch() -> usize {
    256
}
fn default_zeta1() -> f64 {
    0.1
}
fn default_zeta2() -> f64 {
    0.01
}
fn default_t0() -> usize {
    1000
}
fn default_w_min() -> f64 {
    DEFAULT_W_MIN
}
fn default_min_per_task() -> usize {
    DEFAULT_MIN_PER_TASK
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_grid() -> usize {
    11
}
fn default_tail() -> f64 {
    0.1
}
fn default_repeats() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    Axis {
        axis: usize,
        smoothness: f64,
        sigma_sq: f64,
        dim: usize,
    },
    Random {
        dim: usize,
        smoothness: f64,
        sigma_sq: f64,
        #[serde(default = "one")]
        center_scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TiltPowerConfig {
    #[default]
    Squared,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Pike {
        #[serde(default = "default_zeta1")]
        zeta1: f64,
        #[serde(default = "default_zeta2")]
        zeta2: f64,
        #[serde(default = "default_t0")]
        t0: usize,
        #[serde(default = "default_w_min")]
        w_min: f64,
        #[serde(default)]
        init_weights: Option<Vec<f64>>,
        #[serde(default)]
        oracle: bool,
        #[serde(default = "default_min_per_task")]
        min_per_task: usize,
    },
    Balanced {
        #[serde(default = "default_zeta1")]
        zeta1: f64,
        #[serde(default = "default_zeta2")]
        zeta2: f64,
        #[serde(default = "default_t0")]
        t0: usize,
        #[serde(default = "default_w_min")]
        w_min: f64,
        #[serde(default)]
        init_weights: Option<Vec<f64>>,
        #[serde(default)]
        oracle: bool,
        #[serde(default = "default_min_per_task")]
        min_per_task: usize,
        #[serde(default)]
        tilt_power: TiltPowerConfig,
    },
    Conceptual {
        eta: f64,
        #[serde(default = "one")]
        beta: f64,
        #[serde(default = "one")]
        gamma: f64,
        /// Defaults to the smoothness of the summed loss.
        #[serde(default)]
        smoothness: Option<f64>,
        #[serde(default = "yes")]
        oracle: bool,
        #[serde(default)]
        remeasure: bool,
        #[serde(default = "default_min_per_task")]
        min_per_task: usize,
    },
    Mix {
        weights: Vec<f64>,
    },
    Random {},
    RoundRobin {},
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    /// Grid points per axis of the simplex (spacing `1/(n-1)`).
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    /// Fraction of final steps whose losses are averaged in the summary.
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Independent runs per policy, seeded `seed, seed + 1, ...`.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            grid_points: default_grid(),
            tail_fraction: default_tail(),
            repeats: default_repeats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub steps: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(deserialize_with = "tagged_seq")]
    pub tasks: Vec<TaskConfig>,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(deserialize_with = "tagged")]
    pub method: MethodConfig,
    /// Tilt for the balanced method and for the logged tilted loss.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub sweep: SweepSettings,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let mut key = if path == "." { "<root>".to_string() } else { path };
            let mut msg = e.into_inner().to_string();
            if let Some(rest) = msg.strip_prefix(PATH_MARK) {
                if let Some((inner, m)) = rest.split_once(PATH_MARK) {
                    if !inner.starts_with('[') {
                        key.push('.');
                    }
                    key.push_str(inner);
                    msg = m.to_string();
                }
            }
            PikeError::config(key, msg)
        })?;
        if cfg.optimizer.total_steps == 0 {
            cfg.optimizer.total_steps = cfg.steps;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(PikeError::config("steps", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(PikeError::config("batch_size", "must be at least 1"));
        }
        if self.tasks.is_empty() {
            return Err(PikeError::config("tasks", "need at least one task"));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(PikeError::config("tau", format!("must be positive, got {tau}")));
            }
        }
        let dim = self.dim();
        for (i, t) in self.tasks.iter().enumerate() {
            let (d, l, s) = match t {
                TaskConfig::Axis { axis, smoothness, sigma_sq, dim } => {
                    if axis >= dim {
                        return Err(PikeError::config(format!("tasks[{i}].axis"), "must be below dim"));
                    }
                    (*dim, *smoothness, *sigma_sq)
                }
                TaskConfig::Random { dim, smoothness, sigma_sq, .. } => (*dim, *smoothness, *sigma_sq),
            };
            if d != dim || d == 0 {
                return Err(PikeError::config(format!("tasks[{i}].dim"), "all tasks need the same dim >= 1"));
            }
            if !(l > 0.0 && l.is_finite()) {
                return Err(PikeError::config(format!("tasks[{i}].smoothness"), "must be positive"));
            }
            if !(s >= 0.0 && s.is_finite()) {
                return Err(PikeError::config(format!("tasks[{i}].sigma_sq"), "must be nonnegative"));
            }
        }
        if let Some(t) = &self.theta0 {
            if t.len() != dim || t.iter().any(|x| !x.is_finite()) {
                return Err(PikeError::config("theta0", format!("needs {dim} finite entries")));
            }
        }
        let mut opt = self.optimizer;
        if opt.total_steps == 0 {
            opt.total_steps = self.steps;
        }
        opt.validate()?;
        let k = self.tasks.len();
        let check_weights = |key: &str, w: &[f64]| -> Result<()> {
            if w.len() != k || SimplexWeights::new(w.to_vec()).is_err() {
                return Err(PikeError::config(key, format!("need {k} nonnegative weights summing to 1")));
            }
            Ok(())
        };
        match &self.method {
            MethodConfig::Pike { init_weights, min_per_task, .. } => {
                self.pike_config()?.expect("pike method").validate()?;
                if let Some(w) = init_weights {
                    check_weights("method.init_weights", w)?;
                }
                if *min_per_task < 2 {
                    return Err(PikeError::config("method.min_per_task", "must be at least 2"));
                }
            }
            MethodConfig::Balanced { init_weights, min_per_task, .. } => {
                self.pike_config()?.expect("balanced method").validate()?;
                if self.tau.is_none() {
                    return Err(PikeError::config("tau", "required by the balanced method"));
                }
                if let Some(w) = init_weights {
                    check_weights("method.init_weights", w)?;
                }
                if *min_per_task < 2 {
                    return Err(PikeError::config("method.min_per_task", "must be at least 2"));
                }
            }
            MethodConfig::Conceptual { eta, smoothness, min_per_task, .. } => {
                if !(*eta > 0.0 && eta.is_finite()) {
                    return Err(PikeError::config("method.eta", "must be positive"));
                }
                if let Some(l) = smoothness {
                    if !(*l > 0.0) {
                        return Err(PikeError::config("method.smoothness", "must be positive"));
                    }
                }
                if *min_per_task < 2 {
                    return Err(PikeError::config("method.min_per_task", "must be at least 2"));
                }
            }
            MethodConfig::Mix { weights } => check_weights("method.weights", weights)?,
            MethodConfig::Random {} | MethodConfig::RoundRobin {} => {}
        }
        if self.sweep.grid_points < 2 {
            return Err(PikeError::config("sweep.grid_points", "must be at least 2"));
        }
        if self.sweep.repeats == 0 {
            return Err(PikeError::config("sweep.repeats", "must be at least 1"));
        }
        if !(self.sweep.tail_fraction > 0.0 && self.sweep.tail_fraction <= 1.0) {
            return Err(PikeError::config("sweep.tail_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.tasks.first() {
            Some(TaskConfig::Axis { dim, .. }) | Some(TaskConfig::Random { dim, .. }) => *dim,
            None => 0,
        }
    }

    pub fn build_tasks(&self) -> Result<Vec<TaskSpec>> {
        self.tasks
            .iter()
            .enumerate()
            .map(|(i, t)| match *t {
                TaskConfig::Axis { axis, smoothness, sigma_sq, dim } => {
                    TaskSpec::axis(axis, smoothness, sigma_sq, dim)
                }
                TaskConfig::Random { dim, smoothness, sigma_sq, center_scale } => {
                    let mut r = stream(self.seed, Purpose::Instance, i as u64, 0);
                    TaskSpec::random(RandomQuadraticParams::generate(dim, smoothness, sigma_sq, center_scale, &mut r)?)
                }
            })
            .collect()
    }

    pub fn theta0(&self) -> Vec<f64> {
        self.theta0.clone().unwrap_or_else(|| vec![1.0; self.dim()])
    }

    pub fn tilt(&self) -> Result<Option<TiltConfig>> {
        self.tau.map(TiltConfig::new).transpose()
    }

    /// Adaptive-update settings for the pike and balanced methods.
    pub fn pike_config(&self) -> Result<Option<PikeConfig>> {
        Ok(match self.method {
            MethodConfig::Pike { zeta1, zeta2, t0, w_min, .. }
            | MethodConfig::Balanced { zeta1, zeta2, t0, w_min, .. } => Some(PikeConfig {
                zeta1,
                zeta2,
                t0,
                b: self.batch_size,
                w_min,
            }),
            _ => None,
        })
    }

    pub fn stats_mode(oracle: bool, min_per_task: usize) -> StatsMode {
        if oracle {
            StatsMode::Oracle
        } else {
            StatsMode::Estimated { min_per_task }
        }
    }

    pub fn strategy(&self) -> Result<Option<StrategyConfig>> {
        Ok(match &self.method {
            MethodConfig::Mix { weights } => Some(StrategyConfig::Mix(SimplexWeights::new(weights.clone())?)),
            MethodConfig::Random {} => Some(StrategyConfig::Random),
            MethodConfig::RoundRobin {} => Some(StrategyConfig::RoundRobin),
            _ => None,
        })
    }

    pub fn tilt_power(p: TiltPowerConfig) -> TiltPower {
        match p {
            TiltPowerConfig::Squared => TiltPower::Squared,
            TiltPowerConfig::Linear => TiltPower::Linear,
        }
    }

    /// Small two-task adaptive run used for replay checks.
    pub fn demo(seed: u64) -> Self {
        RunConfig {
            seed,
            steps: 200,
            batch_size: 32,
            tasks: vec![
                TaskConfig::Axis { axis: 0, smoothness: 1.0, sigma_sq: 4.0, dim: 3 },
                TaskConfig::Random { dim: 3, smoothness: 1.0, sigma_sq: 1.0, center_scale: 1.0 },
            ],
            theta0: None,
            optimizer: OptimizerConfig::sgd(0.1, 200),
            method: MethodConfig::Pike {
                zeta1: 0.5,
                zeta2: 0.05,
                t0: 20,
                w_min: DEFAULT_W_MIN,
                init_weights: None,
                oracle: false,
                min_per_task: DEFAULT_MIN_PER_TASK,
            },
            tau: Some(1.0),
            sweep: SweepSettings::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "steps": 10,
        "tasks": [
            {"kind": "axis", "axis": 0, "smoothness": 1.0, "sigma_sq": 1.0, "dim": 2},
            {"kind": "axis", "axis": 1, "smoothness": 1.0, "sigma_sq": 1.0, "dim": 2}
        ],
        "method": {"kind": "pike"}
    }"#;

    #[test]
    fn parses_minimal_with_defaults() {
        let c = RunConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.batch_size, 256);
        assert_eq!(c.optimizer.total_steps, 10);
        let p = c.pike_config().unwrap().unwrap();
        assert_eq!((p.zeta1, p.zeta2, p.t0, p.b), (0.1, 0.01, 1000, 256));
        assert_eq!(c.theta0(), vec![1.0, 1.0]);
        assert_eq!(c.build_tasks().unwrap().len(), 2);
    }

    fn err_key(text: &str) -> String {
        match RunConfig::from_json_str(text).unwrap_err() {
            PikeError::Config { key, .. } => key,
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        let bad = MINIMAL.replace("\"sigma_sq\": 1.0, \"dim\": 2}\n", "\"sigma_sq\": \"x\", \"dim\": 2}\n");
        assert_eq!(err_key(&bad), "tasks[1].sigma_sq");
        let bad = MINIMAL.replace("\"steps\": 10", "\"steps\": 10, \"stepz\": 3");
        assert!(err_key(&bad).contains("stepz") || err_key(&bad) == "<root>");
        let bad = MINIMAL.replace("{\"kind\": \"pike\"}", "{\"kind\": \"pike\", \"zeta9\": 1}");
        assert!(err_key(&bad).starts_with("method"));
        let bad = MINIMAL.replace("\"steps\": 10", "\"steps\": 10, \"tau\": 0");
        assert_eq!(err_key(&bad), "tau");
        let bad = MINIMAL.replace("\"steps\": 10", "\"steps\": 10, \"tau\": -2.5");
        assert_eq!(err_key(&bad), "tau");
        let bad = MINIMAL.replace("{\"kind\": \"pike\"}", "{\"kind\": \"balanced\"}");
        assert_eq!(err_key(&bad), "tau");
        let bad = MINIMAL.replace("{\"kind\": \"pike\"}", "{\"kind\": \"mix\", \"weights\": [0.6, 0.6]}");
        assert_eq!(err_key(&bad), "method.weights");
    }

    #[test]
    fn skewed_mix_parses() {
        let text = r#"{
            "steps": 5,
            "tasks": [
                {"kind": "axis", "axis": 0, "smoothness": 1.0, "sigma_sq": 1.0, "dim": 6},
                {"kind": "axis", "axis": 1, "smoothness": 1.0, "sigma_sq": 1.0, "dim": 6},
                {"kind": "axis", "axis": 2, "smoothness": 1.0, "sigma_sq": 1.0, "dim": 6},
                {"kind": "axis", "axis": 3, "smoothness": 1.0, "sigma_sq": 1.0, "dim": 6},
                {"kind": "axis", "axis": 4, "smoothness": 1.0, "sigma_sq": 1.0, "dim": 6},
                {"kind": "axis", "axis": 5, "smoothness": 1.0, "sigma_sq": 1.0, "dim": 6}
            ],
            "method": {"kind": "mix", "weights": [0.42, 0.06, 0.28, 0.02, 0.20, 0.02]}
        }"#;
        let c = RunConfig::from_json_str(text).unwrap();
        assert!(matches!(c.strategy().unwrap(), Some(StrategyConfig::Mix(_))));
    }

    #[test]
    fn demo_is_valid() {
        RunConfig::demo(3).validate().unwrap();
    }
}
