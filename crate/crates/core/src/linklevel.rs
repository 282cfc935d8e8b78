//! Per-interval PHY computations: Shannon rates, interference, exponential
//! moving averages, measured SINR and PF ratios.

use serde::{Deserialize, Serialize};

/// Lower clamp on the long-term average rate (bps/Hz). Keeps `1/R` finite.
pub const DEFAULT_RATE_FLOOR: f64 = 1e-3;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Thermal noise power over `bandwidth_hz` for a PSD in dBm/Hz.
pub fn noise_power_watts(psd_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(psd_dbm_hz + 10.0 * bandwidth_hz.log10())
}

/// What one AP does in one scheduling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ApDecision {
    Off,
    Serve { ue: usize, power_w: f64 },
}

impl ApDecision {
    pub fn power(&self) -> f64 {
        match *self {
            ApDecision::Off => 0.0,
            ApDecision::Serve { power_w, .. } => power_w,
        }
    }

    pub fn served_ue(&self) -> Option<usize> {
        match *self {
            ApDecision::Off => None,
            ApDecision::Serve { ue, .. } => Some(ue),
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self, ApDecision::Off)
    }
}

/// Checks that each serving AP targets one of its own UEs with a power in
/// `(0, p_max]`.
pub fn validate_decisions(decisions: &[ApDecision], association: &[usize], p_max: f64) -> bool {
    decisions.iter().enumerate().all(|(ap, d)| match *d {
        ApDecision::Off => true,
        ApDecision::Serve { ue, power_w } => {
            association.get(ue) == Some(&ap) && power_w > 0.0 && power_w <= p_max * (1.0 + 1e-12)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateOutcome {
    /// Achieved rate per UE in bps/Hz; zero for unserved UEs.
    pub rates: Vec<f64>,
    /// Interference received by every UE from APs other than its own.
    pub interference: Vec<f64>,
}

/// Shannon rates and per-UE interference for one interval.
///
/// `power_gains` is row-major `[ue][ap]` holding `|h_ji(t)|^2`.
pub fn compute_rates(
    decisions: &[ApDecision],
    association: &[usize],
    power_gains: &[f64],
    noise_w: f64,
) -> RateOutcome {
    let num_aps = decisions.len();
    let num_ues = association.len();
    debug_assert_eq!(power_gains.len(), num_ues * num_aps);
    let powers: Vec<f64> = decisions.iter().map(ApDecision::power).collect();

    let mut interference = vec![0.0; num_ues];
    for (ue, &serving) in association.iter().enumerate() {
        let row = &power_gains[ue * num_aps..(ue + 1) * num_aps];
        interference[ue] = row
            .iter()
            .zip(&powers)
            .enumerate()
            .filter(|&(ap, _)| ap != serving)
            .map(|(_, (g, p))| g * p)
            .sum();
    }

    let mut rates = vec![0.0; num_ues];
    for (ap, d) in decisions.iter().enumerate() {
        if let ApDecision::Serve { ue, power_w } = *d {
            let signal = power_gains[ue * num_aps + ap] * power_w;
            rates[ue] = (1.0 + signal / (interference[ue] + noise_w)).log2();
        }
    }
    RateOutcome {
        rates,
        interference,
    }
}

/// Long-term per-UE statistics tracked across scheduling intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub avg_rate: f64,
    pub weight: f64,
    pub avg_interference: f64,
    pub measured_sinr: f64,
    pub pf_ratio: f64,
}

impl LinkStats {
    pub fn new(rate_floor: f64) -> Self {
        Self {
            avg_rate: rate_floor,
            weight: 1.0 / rate_floor,
            avg_interference: 0.0,
            measured_sinr: 0.0,
            pf_ratio: 0.0,
        }
    }

    /// Moving-average update with this interval's rate and interference.
    pub fn update(
        &mut self,
        rate: f64,
        interference: f64,
        alpha_r: f64,
        alpha_i: f64,
        rate_floor: f64,
    ) {
        self.avg_rate = ema(self.avg_rate, rate, alpha_r).max(rate_floor);
        self.weight = 1.0 / self.avg_rate.max(rate_floor);
        self.avg_interference = ema(self.avg_interference, interference, alpha_i);
    }

    /// Refreshes SINR and PF ratio from the current serving-link gain.
    pub fn measure(&mut self, serving_gain: f64, p_max: f64, noise_w: f64) {
        self.measured_sinr = measured_sinr(serving_gain, p_max, self.avg_interference, noise_w);
        self.pf_ratio = pf_ratio(self.weight, self.measured_sinr);
    }
}

#[inline]
pub fn ema(old: f64, new: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * old + alpha * new
}

/// Full-power SINR against the averaged interference.
pub fn measured_sinr(serving_gain: f64, p_max: f64, avg_interference: f64, noise_w: f64) -> f64 {
    serving_gain * p_max / (avg_interference + noise_w)
}

pub fn pf_ratio(weight: f64, sinr: f64) -> f64 {
    weight * (1.0 + sinr).log2()
}

/// Indices sorted by descending PF ratio, ties by ascending index.
pub fn rank_by_pf(pf: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pf.len()).collect();
    idx.sort_by(|&a, &b| pf[b].total_cmp(&pf[a]).then(a.cmp(&b)));
    idx
}
