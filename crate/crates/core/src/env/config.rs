use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::channel::{doppler_hz, PathLossParams};
use crate::linklevel::{dbm_to_watts, noise_power_watts, DEFAULT_RATE_FLOOR};
use crate::topology::DeploymentConfig;

/// Radio and channel parameters shared by every episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioConfig {
    pub bandwidth_hz: f64,
    pub p_max_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub path_loss: PathLossParams,
    pub shadowing_std_db: f64,
    pub carrier_hz: f64,
    /// Scheduling interval duration in seconds.
    pub interval_s: f64,
    pub ue_speed_mps: f64,
    pub num_sinusoids: usize,
    /// Rate averaging parameter.
    pub alpha_rate: f64,
    /// Interference averaging parameter.
    pub alpha_interference: f64,
    pub rate_floor: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 10e6,
            p_max_dbm: 10.0,
            noise_psd_dbm_hz: -174.0,
            path_loss: PathLossParams::default(),
            shadowing_std_db: 7.0,
            carrier_hz: 2.4e9,
            interval_s: 1e-3,
            ue_speed_mps: 1.0,
            num_sinusoids: 16,
            alpha_rate: 0.01,
            alpha_interference: 0.05,
            rate_floor: DEFAULT_RATE_FLOOR,
        }
    }
}

impl RadioConfig {
    pub fn p_max_w(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn noise_w(&self) -> f64 {
        noise_power_watts(self.noise_psd_dbm_hz, self.bandwidth_hz)
    }

    pub fn doppler_hz(&self) -> f64 {
        doppler_hz(self.ue_speed_mps, self.carrier_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub deployment: DeploymentConfig,
    pub radio: RadioConfig,
    /// Scheduling intervals per episode.
    pub episode_len: u32,
    /// Observable UEs per agent.
    pub top_k: usize,
    /// Remote agents per agent.
    pub num_remote: usize,
    /// Number of positive transmit power levels.
    pub power_levels: usize,
    pub report_period: u32,
    pub report_delay: u32,
    pub backhaul_delay: u32,
    pub reward_exponent: f64,
    pub sort_by_pf: bool,
    pub default_weight: f64,
    pub default_sinr_db: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            deployment: DeploymentConfig::default(),
            radio: RadioConfig::default(),
            episode_len: 2000,
            top_k: 3,
            num_remote: 3,
            power_levels: 1,
            report_period: 10,
            report_delay: 5,
            backhaul_delay: 5,
            reward_exponent: 0.8,
            sort_by_pf: true,
            default_weight: 0.0,
            default_sinr_db: -60.0,
        }
    }
}

impl EnvConfig {
    /// Length of one agent's observation vector, `2(n+1)k`.
    pub fn observation_len(&self) -> usize {
        2 * (self.num_remote + 1) * self.top_k
    }

    /// Size of the discrete action space, `1 + pk`.
    pub fn num_actions(&self) -> usize {
        1 + self.power_levels * self.top_k
    }

    /// Transmit power per level in watts, lowest first. Levels are uniform in
    /// dB over the 20 dB below `P_max`; a single level is `P_max` itself.
    pub fn power_levels_w(&self) -> Vec<f64> {
        let p = self.power_levels;
        let top = self.radio.p_max_dbm;
        if p == 1 {
            return vec![dbm_to_watts(top)];
        }
        (1..=p)
            .map(|l| dbm_to_watts(top - 20.0 * (p - l) as f64 / (p - 1) as f64))
            .collect()
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        self.deployment.validate()?;
        self.radio.path_loss.validate()?;
        let bad = |m: String| Err(EnvError::InvalidConfig(m));
        if self.episode_len == 0 {
            return bad("episode_len must be at least 1".into());
        }
        if self.top_k == 0 || self.power_levels == 0 {
            return bad("top_k and power_levels must be at least 1".into());
        }
        if self.report_period == 0 {
            return bad("report_period must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.reward_exponent) {
            return bad(format!(
                "reward_exponent must lie in [0, 1], got {}",
                self.reward_exponent
            ));
        }
        let r = &self.radio;
        if !(r.alpha_rate > 0.0 && r.alpha_rate < 1.0)
            || !(r.alpha_interference > 0.0 && r.alpha_interference < 1.0)
        {
            return bad("averaging parameters must lie in (0, 1)".into());
        }
        if !(r.rate_floor > 0.0) || !(r.bandwidth_hz > 0.0) || !(r.interval_s > 0.0) {
            return bad("rate_floor, bandwidth_hz and interval_s must be positive".into());
        }
        if r.num_sinusoids == 0 || !(r.shadowing_std_db >= 0.0) {
            return bad("num_sinusoids must be positive and shadowing std non-negative".into());
        }
        if !self.sort_by_pf {
            let d = &self.deployment;
            if d.num_ues != d.num_aps * self.top_k {
                return bad(format!(
                    "unsorted observations need every pool to hold exactly k={} UEs \
                     (num_ues = num_aps * k), got {} UEs for {} APs",
                    self.top_k, d.num_ues, d.num_aps
                ));
            }
        }
        Ok(())
    }

    /// Short stable hash of the configuration, used to tag fitted
    /// normalization statistics.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let c = EnvConfig::default();
        assert_eq!(c.observation_len(), 24);
        assert_eq!(c.num_actions(), 4);
        assert!((c.radio.p_max_w() - 0.01).abs() < 1e-15);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn power_levels_span_twenty_db() {
        let c = EnvConfig { power_levels: 5, ..Default::default() };
        let lv = c.power_levels_w();
        assert_eq!(lv.len(), 5);
        assert!((lv[4] - 0.01).abs() < 1e-15);
        assert!((lv[0] - 1e-4).abs() < 1e-15);
        assert!(lv.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn unsorted_mode_requires_equal_pools() {
        let mut c = EnvConfig { sort_by_pf: false, ..Default::default() };
        assert!(c.validate().is_err());
        c.deployment.num_ues = 12;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn fingerprint_tracks_changes() {
        let a = EnvConfig::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.deployment.num_ues = 40;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
