//! Fixed-size per-agent observations and action decoding.

use serde::{Deserialize, Serialize};

use super::feedback::ReportBatch;
use super::EnvError;
use crate::linklevel::{db_to_linear, linear_to_db, pf_ratio, rank_by_pf, ApDecision};

/// One agent's view: `(n+1)` blocks of `k` slots, local block first, then
/// remote agents by ascending distance. Each slot contributes a raw weight
/// and an SINR in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationVector {
    /// Interleaved `(weight, sinr_db)` pairs, length `2(n+1)k`.
    pub values: Vec<f64>,
    /// UE occupying each slot, `None` for padding.
    pub slot_ues: Vec<Option<usize>>,
    /// PF ratio of each slot computed from the visible values.
    pub pf: Vec<f64>,
    /// Measurement time of each slot's values; `None` for defaults.
    pub measured_at: Vec<Option<u32>>,
    pub top_k: usize,
}

impl ObservationVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_slots(&self) -> usize {
        self.slot_ues.len()
    }

    pub fn weight(&self, slot: usize) -> f64 {
        self.values[2 * slot]
    }

    pub fn sinr_db(&self, slot: usize) -> f64 {
        self.values[2 * slot + 1]
    }

    /// The agent's own `k` slots.
    pub fn local_slots(&self) -> &[Option<usize>] {
        &self.slot_ues[..self.top_k]
    }

    /// PF ratio of the agent's top local UE.
    pub fn top_pf(&self) -> f64 {
        self.pf[0]
    }

    /// PF ratio of the top UE of each remote block.
    pub fn remote_top_pf(&self) -> Vec<f64> {
        self.pf.iter().skip(self.top_k).step_by(self.top_k).copied().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ObservationLayout {
    pub top_k: usize,
    pub num_remote: usize,
    pub sort_by_pf: bool,
    pub default_weight: f64,
    pub default_sinr_db: f64,
}

impl ObservationLayout {
    fn default_pf(&self) -> f64 {
        pf_ratio(self.default_weight, db_to_linear(self.default_sinr_db))
    }

    /// Appends one `k`-slot block for `pool` as seen through `view`.
    fn push_block(&self, obs: &mut ObservationVector, pool: Option<&[usize]>, view: Option<&ReportBatch>) {
        let pool = pool.unwrap_or(&[]);
        let entries: Vec<(usize, f64, f64, f64, Option<u32>)> = pool
            .iter()
            .map(|&ue| match view {
                Some(b) => {
                    let r = &b.reports[ue];
                    (ue, r.weight, linear_to_db(r.sinr), pf_ratio(r.weight, r.sinr), Some(r.t_measured))
                }
                None => (ue, self.default_weight, self.default_sinr_db, self.default_pf(), None),
            })
            .collect();
        let order: Vec<usize> = if self.sort_by_pf {
            let pf: Vec<f64> = entries.iter().map(|e| e.3).collect();
            // pools are sorted by UE id, so index ties are UE-id ties
            rank_by_pf(&pf)
        } else {
            (0..entries.len()).collect()
        };
        for slot in 0..self.top_k {
            match order.get(slot).map(|&i| entries[i]) {
                Some((ue, w, s, pf, at)) => {
                    obs.values.extend([w, s]);
                    obs.slot_ues.push(Some(ue));
                    obs.pf.push(pf);
                    obs.measured_at.push(at);
                }
                None => {
                    obs.values.extend([self.default_weight, self.default_sinr_db]);
                    obs.slot_ues.push(None);
                    obs.pf.push(self.default_pf());
                    obs.measured_at.push(None);
                }
            }
        }
    }

    pub fn build(
        &self,
        agent: usize,
        pools: &[Vec<usize>],
        remotes: &[usize],
        local_view: Option<&ReportBatch>,
        remote_view: Option<&ReportBatch>,
    ) -> ObservationVector {
        let slots = (self.num_remote + 1) * self.top_k;
        let mut obs = ObservationVector {
            values: Vec::with_capacity(2 * slots),
            slot_ues: Vec::with_capacity(slots),
            pf: Vec::with_capacity(slots),
            measured_at: Vec::with_capacity(slots),
            top_k: self.top_k,
        };
        self.push_block(&mut obs, Some(&pools[agent]), local_view);
        for r in 0..self.num_remote {
            let pool = remotes.get(r).map(|&ap| pools[ap].as_slice());
            self.push_block(&mut obs, pool, remote_view);
        }
        obs
    }
}

/// Index into the `1 + pk` discrete action space.
pub type ActionId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedAction {
    pub decision: ApDecision,
    /// Set when the action selected an empty slot and was remapped to off.
    pub invalid: bool,
}

/// `0` is off; `a > 0` selects power level `ceil(a/k)` and local slot
/// `(a-1) mod k`.
pub fn decode_action(
    action: ActionId,
    obs: &ObservationVector,
    power_levels_w: &[f64],
) -> Result<DecodedAction, EnvError> {
    let k = obs.top_k;
    let max = power_levels_w.len() * k;
    if action > max {
        return Err(EnvError::ActionOutOfRange { action, max });
    }
    if action == 0 {
        return Ok(DecodedAction { decision: ApDecision::Off, invalid: false });
    }
    let level = (action - 1) / k;
    let slot = (action - 1) % k;
    Ok(match obs.local_slots()[slot] {
        Some(ue) => DecodedAction {
            decision: ApDecision::Serve { ue, power_w: power_levels_w[level] },
            invalid: false,
        },
        None => DecodedAction { decision: ApDecision::Off, invalid: true },
    })
}
