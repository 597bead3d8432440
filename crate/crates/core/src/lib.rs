//! Fixed-confidence best-arm identification when a fraction of the rewards
//! is replaced by an oblivious adversary.
//!
//! * [`bandit`]: instances, the contamination model and seeded rewards.
//! * [`estimators`]: incremental trimmed mean and median.
//! * [`confidence`]: radii, exploration floors, complexity and bounds.
//! * [`algorithms`]: gap-based and successive-elimination policies.
//! * [`harness`]: Monte Carlo trials, experiments and sweeps.
//! * [`config`] and [`ingest`]: configuration files and dataset readers.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod bandit;
pub mod confidence;
pub mod config;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod ingest;
pub mod order_tree;

pub use algorithms::{Policy, PolicyConfig, PolicyKind, RadiusMode, Status};
pub use bandit::{
    Adversary, ArmDistribution, BanditInstance, ContaminationModel, SeedSpec, Stream,
};
pub use config::{ConfigFile, ExperimentConfig};
pub use error::{CbaiError, Result};
pub use estimators::ArmStatistics;
pub use harness::{
    run_experiment, run_trial, sweep, Aggregate, SweepParam, SweepTable, TrialResult,
};
