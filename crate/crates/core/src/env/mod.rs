//! The episodic multi-agent scheduling environment.
//!
//! Each AP is an agent. At every scheduling interval the agents pick a
//! (power level, UE slot) pair or stay silent based on delayed feedback, the
//! network is stepped one interval and a shared weighted sum-rate reward is
//! emitted.
//!
//! Interval bookkeeping: the state at interval `t` holds the moving averages
//! over intervals `1..t-1`. Reports are generated at every multiple of the
//! report period from that state and become visible to the serving AP after
//! the feedback delay, and to remote APs after the additional backhaul delay.

mod config;
pub mod feedback;
mod observation;
mod reward;
mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::{EnvConfig, RadioConfig};
pub use feedback::{FeedbackLog, FeedbackReport, ReportBatch};
pub use observation::{decode_action, ActionId, DecodedAction, ObservationVector};
pub use reward::compute_reward;
pub use trace::{write_trace_csv, TraceRow};

use crate::channel::{draw_long_term_gains, ChannelError, ChannelModel, FadingProcess};
use crate::linklevel::{compute_rates, validate_decisions, ApDecision, LinkStats};
use crate::topology::{
    associate_balanced, associate_max_rsrp, generate_deployment, Deployment, TopologyError,
};
use observation::ObservationLayout;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("action {action} outside [0, {max}]")]
    ActionOutOfRange { action: usize, max: usize },
    #[error("expected {expected} per-agent inputs, got {got}")]
    AgentCount { expected: usize, got: usize },
    #[error("decision set is inconsistent with the user pools or power limit")]
    InvalidDecision,
    #[error("episode finished after {0} intervals")]
    EpisodeFinished(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Rate achieved by every UE this interval (bps/Hz).
    pub rates: Vec<f64>,
    pub decisions: Vec<ApDecision>,
    pub invalid: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observations: Vec<ObservationVector>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    layout: ObservationLayout,
    seed: u64,
    deployment: Deployment,
    pools: Vec<Vec<usize>>,
    channel: ChannelModel,
    stats: Vec<LinkStats>,
    feedback: FeedbackLog,
    t: u32,
    gains: Vec<f64>,
    rate_sums: Vec<f64>,
    observations: Vec<ObservationVector>,
    p_max_w: f64,
    noise_w: f64,
    power_levels_w: Vec<f64>,
}

impl Environment {
    /// Builds a fresh episode from `seed`: deployment, association, long-term
    /// gains and fading state are all drawn from a generator seeded with it.
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self, EnvError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radio = &config.radio;
        let placement = generate_deployment(&config.deployment, &mut rng)?;
        let long_term =
            draw_long_term_gains(&placement, &radio.path_loss, radio.shadowing_std_db, &mut rng)?;
        let (k_ues, n_aps) = (long_term.num_ues, long_term.num_aps);
        let power = long_term.power_matrix();
        let association = if config.sort_by_pf {
            associate_max_rsrp(&power, k_ues, n_aps)?
        } else {
            associate_balanced(&power, k_ues, n_aps, config.top_k)?
        };
        let fading = FadingProcess::new(
            k_ues * n_aps,
            radio.doppler_hz(),
            radio.interval_s,
            radio.num_sinusoids,
            &mut rng,
        );
        let deployment = Deployment::new(placement, association, config.num_remote);
        debug_assert!(deployment.check_partition());
        let pools = deployment.pools();

        let layout = ObservationLayout {
            top_k: config.top_k,
            num_remote: config.num_remote,
            sort_by_pf: config.sort_by_pf,
            default_weight: config.default_weight,
            default_sinr_db: config.default_sinr_db,
        };
        let mut env = Self {
            layout,
            seed,
            pools,
            channel: ChannelModel::new(long_term, fading),
            stats: vec![LinkStats::new(radio.rate_floor); k_ues],
            feedback: FeedbackLog::new(config.report_period, config.report_delay, config.backhaul_delay),
            t: 1,
            gains: Vec::new(),
            rate_sums: vec![0.0; k_ues],
            observations: Vec::new(),
            p_max_w: radio.p_max_w(),
            noise_w: radio.noise_w(),
            power_levels_w: config.power_levels_w(),
            deployment,
            config,
        };
        env.enter_interval();
        Ok(env)
    }

    /// Starts a new episode with a seed drawn from `rng`.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<ObservationVector>, EnvError> {
        self.reset_with_seed(rng.random())
    }

    pub fn reset_with_seed(&mut self, seed: u64) -> Result<Vec<ObservationVector>, EnvError> {
        *self = Self::new(self.config.clone(), seed)?;
        Ok(self.observations.clone())
    }

    /// Refreshes channel, measured statistics, feedback and observations for
    /// the current interval.
    fn enter_interval(&mut self) {
        self.channel.power_gains_into(self.t as u64, &mut self.gains);
        let n_aps = self.num_aps();
        for (ue, s) in self.stats.iter_mut().enumerate() {
            let serving = self.deployment.association[ue];
            s.measure(self.gains[ue * n_aps + serving], self.p_max_w, self.noise_w);
        }
        if self.feedback.is_report_time(self.t) {
            let t = self.t;
            let reports = self
                .stats
                .iter()
                .enumerate()
                .map(|(ue, s)| FeedbackReport {
                    ue,
                    weight: s.weight,
                    sinr: s.measured_sinr,
                    t_measured: t,
                })
                .collect();
            self.feedback.push(ReportBatch { t_measured: t, reports });
        }
        self.feedback.prune(self.t);
        self.observations = self.build_observations();
    }

    pub fn build_observations(&self) -> Vec<ObservationVector> {
        let local = self.feedback.local_view(self.t);
        let remote = self.feedback.remote_view(self.t);
        (0..self.num_aps())
            .map(|ap| {
                self.layout.build(ap, &self.pools, &self.deployment.remote_agents[ap], local, remote)
            })
            .collect()
    }

    /// Steps the network with one action per agent.
    pub fn step(&mut self, actions: &[ActionId]) -> Result<StepOutcome, EnvError> {
        self.ensure_active(actions.len())?;
        let mut decisions = Vec::with_capacity(actions.len());
        let mut invalid = Vec::with_capacity(actions.len());
        for (&a, obs) in actions.iter().zip(&self.observations) {
            let d = decode_action(a, obs, &self.power_levels_w)?;
            decisions.push(d.decision);
            invalid.push(d.invalid);
        }
        Ok(self.advance(decisions, invalid))
    }

    /// Steps the network with explicit per-AP decisions (used by baselines).
    pub fn step_decisions(&mut self, decisions: &[ApDecision]) -> Result<StepOutcome, EnvError> {
        self.ensure_active(decisions.len())?;
        if !validate_decisions(decisions, &self.deployment.association, self.p_max_w) {
            return Err(EnvError::InvalidDecision);
        }
        let n = decisions.len();
        Ok(self.advance(decisions.to_vec(), vec![false; n]))
    }

    fn ensure_active(&self, inputs: usize) -> Result<(), EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeFinished(self.config.episode_len));
        }
        if inputs != self.num_aps() {
            return Err(EnvError::AgentCount { expected: self.num_aps(), got: inputs });
        }
        Ok(())
    }

    fn advance(&mut self, decisions: Vec<ApDecision>, invalid: Vec<bool>) -> StepOutcome {
        let outcome = compute_rates(&decisions, &self.deployment.association, &self.gains, self.noise_w);
        let served_weights: Vec<f64> = decisions
            .iter()
            .map(|d| d.served_ue().map_or(self.config.default_weight, |ue| self.visible_weight(ue)))
            .collect();
        let top_pf: Vec<f64> = self.observations.iter().map(ObservationVector::top_pf).collect();
        let rewards = compute_reward(
            &decisions,
            &outcome.rates,
            &served_weights,
            self.config.reward_exponent,
            &invalid,
            &top_pf,
        );

        let radio = &self.config.radio;
        for (ue, s) in self.stats.iter_mut().enumerate() {
            self.rate_sums[ue] += outcome.rates[ue];
            s.update(
                outcome.rates[ue],
                outcome.interference[ue],
                radio.alpha_rate,
                radio.alpha_interference,
                radio.rate_floor,
            );
        }
        self.t += 1;
        self.enter_interval();

        StepOutcome {
            observations: self.observations.clone(),
            rewards,
            done: self.is_done(),
            info: StepInfo { rates: outcome.rates, decisions, invalid },
        }
    }

    /// Weight of `ue` as last delivered to its serving AP, or the default
    /// weight before any report has arrived.
    pub fn visible_weight(&self, ue: usize) -> f64 {
        self.visible_report(ue).map_or(self.config.default_weight, |r| r.weight)
    }

    /// Latest report of `ue` delivered to its serving AP.
    pub fn visible_report(&self, ue: usize) -> Option<&FeedbackReport> {
        self.feedback.local_view(self.t).map(|b| &b.reports[ue])
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn pools(&self) -> &[Vec<usize>] {
        &self.pools
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn num_aps(&self) -> usize {
        self.pools.len()
    }

    pub fn num_ues(&self) -> usize {
        self.stats.len()
    }

    /// Current interval index (starts at 1).
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t > self.config.episode_len
    }

    pub fn observations(&self) -> &[ObservationVector] {
        &self.observations
    }

    /// `|h_ji(t)|^2` at the current interval, row-major `[ue][ap]`.
    pub fn power_gains(&self) -> &[f64] {
        &self.gains
    }

    /// Ground-truth statistics at the current interval.
    pub fn link_stats(&self) -> &[LinkStats] {
        &self.stats
    }

    pub fn p_max_w(&self) -> f64 {
        self.p_max_w
    }

    pub fn noise_w(&self) -> f64 {
        self.noise_w
    }

    pub fn power_levels_w(&self) -> &[f64] {
        &self.power_levels_w
    }

    pub fn intervals_elapsed(&self) -> u32 {
        self.t - 1
    }

    /// Per-UE rate averaged over the intervals stepped so far (bps/Hz).
    pub fn average_rates(&self) -> Vec<f64> {
        let steps = self.intervals_elapsed().max(1) as f64;
        self.rate_sums.iter().map(|s| s / steps).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::DeploymentConfig;

    fn small(n: usize, k: usize, t: u32) -> EnvConfig {
        EnvConfig {
            deployment: DeploymentConfig { num_aps: n, num_ues: k, ..Default::default() },
            episode_len: t,
            ..Default::default()
        }
    }

    #[test]
    fn reset_gives_default_observations() {
        let env = Environment::new(EnvConfig::default(), 3).unwrap();
        assert_eq!(env.t(), 1);
        assert_eq!(env.observations().len(), 4);
        for obs in env.observations() {
            assert_eq!(obs.len(), 24);
            assert!(obs.values.chunks(2).all(|c| c == [0.0, -60.0]));
        }
        assert!(env.deployment().check_partition());
    }

    #[test]
    fn same_seed_same_episode() {
        let a = Environment::new(EnvConfig::default(), 17).unwrap();
        let b = Environment::new(EnvConfig::default(), 17).unwrap();
        assert_eq!(a.observations(), b.observations());
        assert_eq!(a.deployment(), b.deployment());
        assert_eq!(a.power_gains(), b.power_gains());
    }

    #[test]
    fn single_step_episode() {
        let mut env = Environment::new(small(2, 4, 1), 1).unwrap();
        let out = env.step(&[1, 1]).unwrap();
        assert!(out.done);
        assert!(matches!(env.step(&[0, 0]), Err(EnvError::EpisodeFinished(1))));
    }

    #[test]
    fn wrong_agent_count() {
        let mut env = Environment::new(small(2, 4, 5), 1).unwrap();
        assert!(matches!(env.step(&[1]), Err(EnvError::AgentCount { expected: 2, got: 1 })));
        assert!(matches!(env.step(&[9, 0]), Err(EnvError::ActionOutOfRange { action: 9, max: 3 })));
    }

    #[test]
    fn all_off_never_serves() {
        let mut env = Environment::new(small(4, 24, 100), 5).unwrap();
        for _ in 0..100 {
            let out = env.step(&[0; 4]).unwrap();
            let nonzero: Vec<f64> = out.rewards.iter().copied().filter(|&r| r != 0.0).collect();
            assert!(nonzero.len() <= 1);
            assert!(nonzero.iter().all(|&r| r < 0.0));
        }
        assert!(env.average_rates().iter().all(|&r| r == 0.0));
        assert!(env.link_stats().iter().all(|s| s.avg_rate == env.config().radio.rate_floor));
    }

    #[test]
    fn baseline_decisions_validated() {
        let mut env = Environment::new(small(2, 4, 5), 2).unwrap();
        let foreign = env.pools()[1][0];
        let bad = [ApDecision::Serve { ue: foreign, power_w: 0.01 }, ApDecision::Off];
        assert!(matches!(env.step_decisions(&bad), Err(EnvError::InvalidDecision)));
    }

    #[test]
    fn unsorted_mode_balances_pools() {
        let cfg = EnvConfig { sort_by_pf: false, ..small(4, 12, 10) };
        let env = Environment::new(cfg, 9).unwrap();
        assert!(env.pools().iter().all(|p| p.len() == 3));
        for (ap, obs) in env.observations().iter().enumerate() {
            let expected: Vec<Option<usize>> = env.pools()[ap].iter().map(|&u| Some(u)).collect();
            assert_eq!(obs.local_slots(), expected.as_slice());
        }
    }
}
