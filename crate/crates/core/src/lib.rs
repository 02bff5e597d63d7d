//! Adaptive data mixing for multitask stochastic optimization on synthetic
//! quadratic task families.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod tasks;
pub mod types;

pub mod mixer;
pub mod optim;
pub mod trainer;

pub mod example1;
pub mod verify;

pub mod config;
pub mod report;
pub mod commands;

pub use error::{PikeError, Result};
pub use types::{
    validate_simplex, BatchPlan, ConflictProfile, ParamVector, SimplexWeights, TaskGradStats,
    TaskStat, TrainRecord,
};
