//! Metrics, environment sets, validation-set construction and evaluation.

mod analysis;
mod config;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub use analysis::{
    export_decision_log, interference_profile, pareto_front, write_decision_log, DecisionRow,
    ProfilePoint,
};
pub use config::{NormalizationConfig, RunConfig, ValidationConfig};

use crate::baselines::BaselineKind;
use crate::dqn::EpochRecord;
use crate::env::{EnvConfig, EnvError, Environment};
use crate::scheduler::{run_episode, Scheduler};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(
        "only {accepted} of {target} validation environments accepted after {candidates} candidates"
    )]
    InsufficientCandidates {
        accepted: usize,
        target: usize,
        candidates: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// The `(floor(K/20) + 1)`-th smallest rate: the largest `R` met by at least
/// 95% of the users.
pub fn pct5_rate(rates: &[f64]) -> f64 {
    assert!(!rates.is_empty(), "no rates");
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[rates.len() * 5 / 100]
}

/// Sum rate, 5th-percentile rate and score. Units follow the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub sum_rate: f64,
    pub pct5_rate: f64,
    pub score: f64,
}

impl MetricsSummary {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            sum_rate: self.sum_rate * factor,
            pct5_rate: self.pct5_rate * factor,
            score: self.score * factor,
        }
    }

    /// bps/Hz to Mbps.
    pub fn mbps(&self, bandwidth_hz: f64) -> Self {
        self.scaled(bandwidth_hz / 1e6)
    }
}

/// Per-episode metrics from per-UE average rates in bps/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub pct5_rate: f64,
    pub score: f64,
    pub bandwidth_hz: f64,
}

impl EpisodeMetrics {
    pub fn summary(&self) -> MetricsSummary {
        MetricsSummary {
            sum_rate: self.sum_rate,
            pct5_rate: self.pct5_rate,
            score: self.score,
        }
    }

    pub fn summary_mbps(&self) -> MetricsSummary {
        self.summary().mbps(self.bandwidth_hz)
    }

    pub fn rates_mbps(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r * self.bandwidth_hz / 1e6).collect()
    }
}

pub fn episode_metrics(rates: &[f64], bandwidth_hz: f64) -> EpisodeMetrics {
    let sum_rate: f64 = rates.iter().sum();
    let pct5 = pct5_rate(rates);
    EpisodeMetrics {
        rates: rates.to_vec(),
        sum_rate,
        pct5_rate: pct5,
        score: sum_rate / rates.len() as f64 + 3.0 * pct5,
        bandwidth_hz,
    }
}

/// Pareto dominance on (sum rate, 5th-percentile rate).
pub fn dominates(a: &MetricsSummary, b: &MetricsSummary) -> bool {
    a.sum_rate >= b.sum_rate
        && a.pct5_rate >= b.pct5_rate
        && (a.sum_rate > b.sum_rate || a.pct5_rate > b.pct5_rate)
}

/// Mean and sample standard deviation of each field.
pub fn mean_std(items: &[MetricsSummary]) -> (MetricsSummary, MetricsSummary) {
    let n = items.len() as f64;
    let field = |f: fn(&MetricsSummary) -> f64| {
        let mean = items.iter().map(f).sum::<f64>() / n;
        let var = if items.len() > 1 {
            items.iter().map(|m| (f(m) - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var.sqrt())
    };
    let (s, ss) = field(|m| m.sum_rate);
    let (p, ps) = field(|m| m.pct5_rate);
    let (c, cs) = field(|m| m.score);
    (
        MetricsSummary { sum_rate: s, pct5_rate: p, score: c },
        MetricsSummary { sum_rate: ss, pct5_rate: ps, score: cs },
    )
}

/// Environment realizations identified by their seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSet {
    pub env_config: EnvConfig,
    pub seeds: Vec<u64>,
}

impl EnvSet {
    pub fn random<R: Rng + ?Sized>(env_config: EnvConfig, count: usize, rng: &mut R) -> Self {
        Self {
            env_config,
            seeds: (0..count).map(|_| rng.random()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn instantiate(&self, index: usize) -> Result<Environment, EnvError> {
        Environment::new(self.env_config.clone(), self.seeds[index])
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Per-environment metrics plus mean and sample std over the set, bps/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_env: Vec<EpisodeMetrics>,
    pub mean: MetricsSummary,
    pub std: MetricsSummary,
}

/// Runs one full episode per member of `set`, in parallel. `make` builds the
/// scheduler for the member with the given index.
pub fn evaluate<S, F>(set: &EnvSet, make: F) -> Result<Evaluation, EnvError>
where
    S: Scheduler,
    F: Fn(usize) -> S + Sync,
{
    let bandwidth = set.env_config.radio.bandwidth_hz;
    let per_env: Vec<EpisodeMetrics> = (0..set.len())
        .into_par_iter()
        .map(|i| {
            let mut env = set.instantiate(i)?;
            let mut scheduler = make(i);
            let run = run_episode(&mut env, &mut scheduler, None)?;
            Ok(episode_metrics(&run.average_rates, bandwidth))
        })
        .collect::<Result<_, EnvError>>()?;
    let summaries: Vec<MetricsSummary> = per_env.iter().map(|m| m.summary()).collect();
    let (mean, std) = mean_std(&summaries);
    Ok(Evaluation { per_env, mean, std })
}

pub fn evaluate_baseline(set: &EnvSet, kind: BaselineKind) -> Result<Evaluation, EnvError> {
    evaluate(set, |_| kind)
}

/// Writes `env,seed,sum_rate_mbps,pct5_mbps,score_mbps`, one row per member.
pub fn write_evaluation_csv<W: Write>(set: &EnvSet, eval: &Evaluation, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["env", "seed", "sum_rate_mbps", "pct5_mbps", "score_mbps"])?;
    for (i, (m, seed)) in eval.per_env.iter().zip(&set.seeds).enumerate() {
        let s = m.summary_mbps();
        w.write_record([
            i.to_string(),
            seed.to_string(),
            s.sum_rate.to_string(),
            s.pct5_rate.to_string(),
            s.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `epoch,sum_rate_mbps,pct5_mbps,score`, one row per epoch.
pub fn write_epoch_csv<W: Write>(records: &[EpochRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "sum_rate_mbps", "pct5_mbps", "score"])?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            r.sum_rate_mbps.to_string(),
            r.pct5_mbps.to_string(),
            r.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sum and 5th-percentile rate of one reference baseline, bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMetrics {
    pub sum_rate: f64,
    pub pct5_rate: f64,
}

impl ReferenceMetrics {
    fn of(m: &EpisodeMetrics) -> Self {
        Self {
            sum_rate: m.sum_rate,
            pct5_rate: m.pct5_rate,
        }
    }

    fn within(&self, reference: &ReferenceMetrics, tolerance: f64) -> bool {
        let close = |x: f64, r: f64| (x - r).abs() <= tolerance * r.abs();
        close(self.sum_rate, reference.sum_rate) && close(self.pct5_rate, reference.pct5_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationMember {
    pub seed: u64,
    pub full_reuse: ReferenceMetrics,
    pub tdm: ReferenceMetrics,
}

/// Realizations whose full-reuse and TDM metrics are both close to the
/// population means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSet {
    pub env_config: EnvConfig,
    pub tolerance: f64,
    pub population_size: usize,
    pub full_reuse_mean: ReferenceMetrics,
    pub tdm_mean: ReferenceMetrics,
    pub members: Vec<ValidationMember>,
}

impl ValidationSet {
    pub fn env_set(&self) -> EnvSet {
        EnvSet {
            env_config: self.env_config.clone(),
            seeds: self.members.iter().map(|m| m.seed).collect(),
        }
    }

    pub fn accepts(&self, member: &ValidationMember) -> bool {
        member.full_reuse.within(&self.full_reuse_mean, self.tolerance)
            && member.tdm.within(&self.tdm_mean, self.tolerance)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn reference_members(config: &EnvConfig, seeds: &[u64]) -> Result<Vec<ValidationMember>, EnvError> {
    let set = EnvSet {
        env_config: config.clone(),
        seeds: seeds.to_vec(),
    };
    let fr = evaluate_baseline(&set, BaselineKind::FullReuse)?;
    let tdm = evaluate_baseline(&set, BaselineKind::Tdm)?;
    Ok(seeds
        .iter()
        .zip(fr.per_env.iter().zip(&tdm.per_env))
        .map(|(&seed, (f, t))| ValidationMember {
            seed,
            full_reuse: ReferenceMetrics::of(f),
            tdm: ReferenceMetrics::of(t),
        })
        .collect())
}

fn mean_reference(items: impl Iterator<Item = ReferenceMetrics> + Clone) -> ReferenceMetrics {
    let n = items.clone().count() as f64;
    let (s, p) = items.fold((0.0, 0.0), |(s, p), m| (s + m.sum_rate, p + m.pct5_rate));
    ReferenceMetrics {
        sum_rate: s / n,
        pct5_rate: p / n,
    }
}

/// Draws `population_size` realizations to estimate the mean full-reuse and
/// TDM metrics, then accepts realizations (the population first, then fresh
/// ones) whose metrics for both baselines lie within `tolerance` relative
/// error of those means, until `target_count` are accepted or
/// `max_candidates` have been tried.
pub fn build_validation_set<R: Rng + ?Sized>(
    env_config: &EnvConfig,
    target_count: usize,
    population_size: usize,
    tolerance: f64,
    max_candidates: usize,
    rng: &mut R,
) -> Result<ValidationSet, HarnessError> {
    if population_size < target_count || target_count == 0 {
        return Err(HarnessError::InvalidArgument(format!(
            "need population_size ({population_size}) >= target_count ({target_count}) >= 1"
        )));
    }
    if !(tolerance >= 0.0) {
        return Err(HarnessError::InvalidArgument("tolerance must be non-negative".into()));
    }
    env_config.validate()?;
    let population_seeds: Vec<u64> = (0..population_size).map(|_| rng.random()).collect();
    let population = reference_members(env_config, &population_seeds)?;
    let mut set = ValidationSet {
        env_config: env_config.clone(),
        tolerance,
        population_size,
        full_reuse_mean: mean_reference(population.iter().map(|m| m.full_reuse)),
        tdm_mean: mean_reference(population.iter().map(|m| m.tdm)),
        members: Vec::with_capacity(target_count),
    };

    let mut tried = 0;
    let mut batch = population;
    loop {
        for m in batch {
            if set.members.len() == target_count || tried == max_candidates {
                break;
            }
            tried += 1;
            if set.accepts(&m) {
                set.members.push(m);
            }
        }
        if set.members.len() == target_count {
            return Ok(set);
        }
        if tried >= max_candidates {
            return Err(HarnessError::InsufficientCandidates {
                accepted: set.members.len(),
                target: target_count,
                candidates: tried,
            });
        }
        let chunk = population_size.min(max_candidates - tried);
        let seeds: Vec<u64> = (0..chunk).map(|_| rng.random()).collect();
        batch = reference_members(env_config, &seeds)?;
    }
}
