//! Common driver for anything that schedules an environment: baselines
//! decide per-AP directly, learned policies pick discrete actions.

use crate::env::{ActionId, EnvError, Environment, StepOutcome, TraceRow};
use crate::linklevel::ApDecision;

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Actions(Vec<ActionId>),
    Decisions(Vec<ApDecision>),
}

pub trait Scheduler {
    fn schedule(&mut self, env: &Environment) -> Schedule;
}

impl<S: Scheduler + ?Sized> Scheduler for &mut S {
    fn schedule(&mut self, env: &Environment) -> Schedule {
        (**self).schedule(env)
    }
}

pub fn apply(env: &mut Environment, schedule: &Schedule) -> Result<StepOutcome, EnvError> {
    match schedule {
        Schedule::Actions(a) => env.step(a),
        Schedule::Decisions(d) => env.step_decisions(d),
    }
}

/// Per-UE average rates and every emitted reward for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRun {
    pub average_rates: Vec<f64>,
    /// Rewards in interval order, one entry per agent.
    pub rewards: Vec<Vec<f64>>,
}

/// Runs `env` to the end of its episode under `scheduler`. When `trace` is
/// given, one row per AP and interval is appended to it.
pub fn run_episode<S: Scheduler + ?Sized>(
    env: &mut Environment,
    scheduler: &mut S,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EpisodeRun, EnvError> {
    let mut rewards = Vec::with_capacity(env.config().episode_len as usize);
    while !env.is_done() {
        let t = env.t();
        let schedule = scheduler.schedule(env);
        let outcome = apply(env, &schedule)?;
        if let Some(rows) = trace.as_deref_mut() {
            let actions = match &schedule {
                Schedule::Actions(a) => Some(a.as_slice()),
                Schedule::Decisions(_) => None,
            };
            rows.extend(TraceRow::from_step(t, actions, &outcome));
        }
        rewards.push(outcome.rewards);
    }
    Ok(EpisodeRun {
        average_rates: env.average_rates(),
        rewards,
    })
}
