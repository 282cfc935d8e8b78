//! Offline statistics for input normalization.
//!
//! Observations are mapped through an empirical CDF quantized at `Q`
//! equally spaced percentiles, which makes the network inputs roughly
//! uniform on `{-1/2, 1/Q - 1/2, ..., 1/2}` whatever the deployment density.
//! Rewards are standardized with the dataset mean and standard deviation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::baselines::BaselineKind;
use crate::env::{EnvConfig, EnvError, Environment, ObservationVector};
use crate::scheduler::{apply, Schedule};

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("dataset has no {0} samples")]
    EmptyDataset(&'static str),
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("need at least 2 percentile levels, got {0}")]
    InvalidLevels(usize),
    #[error("collection needs at least one baseline and one episode")]
    NothingToCollect,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed statistics file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Raw observation entries and rewards gathered by running baselines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OfflineDataset {
    pub weights: Vec<f64>,
    pub sinr_db: Vec<f64>,
    pub rewards: Vec<f64>,
}

impl OfflineDataset {
    /// Records every measured (non-padding) slot of an observation.
    pub fn record_observation(&mut self, obs: &ObservationVector) {
        for slot in 0..obs.num_slots() {
            if obs.measured_at[slot].is_some() {
                self.weights.push(obs.weight(slot));
                self.sinr_db.push(obs.sinr_db(slot));
            }
        }
    }

    pub fn extend(&mut self, other: OfflineDataset) {
        self.weights.extend(other.weights);
        self.sinr_db.extend(other.sinr_db);
        self.rewards.extend(other.rewards);
    }
}

/// Runs every baseline on `num_episodes` fresh realizations and gathers all
/// agents' observations and per-interval rewards.
pub fn collect_offline_dataset<R: Rng + ?Sized>(
    env_config: &EnvConfig,
    baselines: &[BaselineKind],
    num_episodes: usize,
    rng: &mut R,
) -> Result<OfflineDataset, NormalizeError> {
    if baselines.is_empty() || num_episodes == 0 {
        return Err(NormalizeError::NothingToCollect);
    }
    env_config.validate()?;
    let seeds: Vec<u64> = (0..num_episodes).map(|_| rng.random()).collect();
    let jobs: Vec<(u64, BaselineKind)> = seeds
        .iter()
        .flat_map(|&s| baselines.iter().map(move |&b| (s, b)))
        .collect();
    let parts: Vec<OfflineDataset> = jobs
        .par_iter()
        .map(|&(seed, baseline)| collect_episode(env_config, baseline, seed))
        .collect::<Result<_, _>>()?;
    let mut data = OfflineDataset::default();
    for p in parts {
        data.extend(p);
    }
    Ok(data)
}

fn collect_episode(
    config: &EnvConfig,
    baseline: BaselineKind,
    seed: u64,
) -> Result<OfflineDataset, NormalizeError> {
    let mut env = Environment::new(config.clone(), seed)?;
    let mut data = OfflineDataset::default();
    while !env.is_done() {
        for obs in env.observations() {
            data.record_observation(obs);
        }
        let schedule = Schedule::Decisions(baseline.decide(&env));
        let out = apply(&mut env, &schedule)?;
        data.rewards.extend(out.rewards);
    }
    Ok(data)
}

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Thresholds at probabilities `0, 1/(Q-1), ..., 1`.
pub fn percentile_thresholds(values: &[f64], levels: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (0..levels)
        .map(|q| quantile_sorted(&sorted, q as f64 / (levels - 1) as f64))
        .collect()
}

/// Maps `v` to `count(p_q <= v)/Q - 1/2`: `-1/2` below the dataset minimum,
/// `(q+1)/Q - 1/2` on `[p_q, p_{q+1})` and `+1/2` at or above the maximum.
pub fn map_observation(v: f64, thresholds: &[f64]) -> f64 {
    let count = thresholds.partition_point(|&p| p <= v);
    count as f64 / thresholds.len() as f64 - 0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileMapper {
    #[serde(rename = "Q")]
    pub levels: usize,
    pub weight_thresholds: Vec<f64>,
    pub sinr_db_thresholds: Vec<f64>,
}

impl PercentileMapper {
    pub fn map_weight(&self, w: f64) -> f64 {
        map_observation(w, &self.weight_thresholds)
    }

    pub fn map_sinr_db(&self, s: f64) -> f64 {
        map_observation(s, &self.sinr_db_thresholds)
    }

    /// Maps interleaved `(weight, sinr_db)` pairs.
    pub fn map_values(&self, raw: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(raw.chunks_exact(2).flat_map(|c| [self.map_weight(c[0]), self.map_sinr_db(c[1])]));
    }

    pub fn map_vector(&self, obs: &ObservationVector) -> Vec<f64> {
        let mut out = Vec::with_capacity(obs.len());
        self.map_values(&obs.values, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardNormalizer {
    pub mu_rew: f64,
    pub sigma_rew: f64,
}

impl RewardNormalizer {
    pub fn normalize(&self, r: f64) -> f64 {
        (r - self.mu_rew) / self.sigma_rew
    }
}

/// Fits the percentile mapper and reward standardizer on a dataset.
pub fn fit(
    dataset: &OfflineDataset,
    levels: usize,
) -> Result<(PercentileMapper, RewardNormalizer), NormalizeError> {
    if levels < 2 {
        return Err(NormalizeError::InvalidLevels(levels));
    }
    for (name, v) in [
        ("weight", &dataset.weights),
        ("sinr", &dataset.sinr_db),
        ("reward", &dataset.rewards),
    ] {
        if v.is_empty() {
            return Err(NormalizeError::EmptyDataset(name));
        }
    }
    let weight_thresholds = percentile_thresholds(&dataset.weights, levels);
    let sinr_db_thresholds = percentile_thresholds(&dataset.sinr_db, levels);
    for (name, th) in [("weight", &weight_thresholds), ("sinr", &sinr_db_thresholds)] {
        if th[0] == th[levels - 1] {
            return Err(NormalizeError::DegenerateDataset(format!(
                "all {name} observations equal {}",
                th[0]
            )));
        }
    }
    let n = dataset.rewards.len() as f64;
    let mu_rew = dataset.rewards.iter().sum::<f64>() / n;
    let var = dataset.rewards.iter().map(|r| (r - mu_rew).powi(2)).sum::<f64>() / n;
    let sigma_rew = var.sqrt();
    if !(sigma_rew > 0.0) {
        return Err(NormalizeError::DegenerateDataset(format!(
            "reward standard deviation is {sigma_rew}"
        )));
    }
    Ok((
        PercentileMapper {
            levels,
            weight_thresholds,
            sinr_db_thresholds,
        },
        RewardNormalizer { mu_rew, sigma_rew },
    ))
}

/// Fitted statistics as persisted next to checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    #[serde(flatten)]
    pub mapper: PercentileMapper,
    #[serde(flatten)]
    pub reward: RewardNormalizer,
    pub config_fingerprint: String,
}

impl NormalizationStats {
    pub fn fit(
        dataset: &OfflineDataset,
        levels: usize,
        config: &EnvConfig,
    ) -> Result<Self, NormalizeError> {
        let (mapper, reward) = fit(dataset, levels)?;
        Ok(Self {
            mapper,
            reward,
            config_fingerprint: config.fingerprint(),
        })
    }

    pub fn matches(&self, config: &EnvConfig) -> bool {
        self.config_fingerprint == config.fingerprint()
    }

    pub fn save(&self, path: &Path) -> Result<(), NormalizeError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NormalizeError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
