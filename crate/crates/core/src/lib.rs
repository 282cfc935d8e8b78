//! Multi-agent deep reinforcement learning for downlink radio resource
//! management: a system-level multi-AP simulator, reference schedulers and a
//! shared-policy double DQN trainer.
//!
//! Start from [`env::Environment`] for the simulator, [`baselines`] for the
//! reference schedulers, [`dqn::run_training`] for training and [`harness`]
//! for metrics and evaluation.

pub mod baselines;
pub mod channel;
pub mod dqn;
pub mod env;
pub mod harness;
pub mod linklevel;
pub mod nn;
pub mod normalize;
pub mod scheduler;
pub mod topology;

pub use baselines::BaselineKind;
pub use dqn::{DqnPolicy, RandomPolicy, TrainerConfig};
pub use env::{EnvConfig, Environment, ObservationVector, StepOutcome};
pub use harness::{EnvSet, EpisodeMetrics, MetricsSummary, RunConfig};
pub use linklevel::ApDecision;
pub use normalize::NormalizationStats;
pub use scheduler::{Schedule, Scheduler};

/// Any error produced by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Topology(#[from] topology::TopologyError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Env(#[from] env::EnvError),
    #[error(transparent)]
    Normalize(#[from] normalize::NormalizeError),
    #[error(transparent)]
    Nn(#[from] nn::NnError),
    #[error(transparent)]
    Dqn(#[from] dqn::DqnError),
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
}
