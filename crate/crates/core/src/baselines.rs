//! Reference schedulers: full reuse, round-robin TDM and centralized ITLinQ.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::env::Environment;
use crate::linklevel::{pf_ratio, ApDecision};
use crate::scheduler::{Schedule, Scheduler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    FullReuse,
    Tdm,
    #[serde(rename = "itlinq")]
    ItLinq { m_itq: f64, eta: f64 },
}

impl BaselineKind {
    pub const ITLINQ_DEFAULT: BaselineKind = BaselineKind::ItLinq { m_itq: 1.0, eta: 0.4 };

    pub fn all() -> [BaselineKind; 3] {
        [BaselineKind::FullReuse, BaselineKind::Tdm, Self::ITLINQ_DEFAULT]
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::FullReuse => "full_reuse",
            BaselineKind::Tdm => "tdm",
            BaselineKind::ItLinq { .. } => "itlinq",
        }
    }

    /// Decisions for the environment's current interval.
    pub fn decide(&self, env: &Environment) -> Vec<ApDecision> {
        let p_max = env.p_max_w();
        match *self {
            BaselineKind::FullReuse => {
                let pf: Vec<f64> = (0..env.num_ues()).map(|ue| visible_pf(env, ue)).collect();
                full_reuse_decide(env.pools(), &pf, p_max)
            }
            BaselineKind::Tdm => tdm_decide(env.t(), &env.deployment().association, p_max),
            BaselineKind::ItLinq { m_itq, eta } => {
                let pf: Vec<f64> = env.link_stats().iter().map(|s| s.pf_ratio).collect();
                let selections: Vec<Selection> = env
                    .pools()
                    .iter()
                    .map(|pool| {
                        let ue = top_pf_ue(pool, &pf);
                        Selection { ue, pf: pf[ue] }
                    })
                    .collect();
                itlinq_decide(
                    env.power_gains(),
                    &selections,
                    m_itq,
                    eta,
                    p_max,
                    env.noise_w(),
                )
            }
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full_reuse" | "full-reuse" => Ok(BaselineKind::FullReuse),
            "tdm" => Ok(BaselineKind::Tdm),
            "itlinq" => Ok(Self::ITLINQ_DEFAULT),
            other => Err(format!("unknown baseline '{other}' (full_reuse|tdm|itlinq)")),
        }
    }
}

impl Scheduler for BaselineKind {
    fn schedule(&mut self, env: &Environment) -> Schedule {
        Schedule::Decisions(self.decide(env))
    }
}

/// PF ratio of `ue` from the last report delivered to its serving AP.
fn visible_pf(env: &Environment, ue: usize) -> f64 {
    let cfg = env.config();
    let (w, sinr) = env.visible_report(ue).map_or(
        (cfg.default_weight, 10f64.powf(cfg.default_sinr_db / 10.0)),
        |r| (r.weight, r.sinr),
    );
    pf_ratio(w, sinr)
}

/// Highest-PF UE of a pool; ties go to the lowest UE id.
pub fn top_pf_ue(pool: &[usize], pf: &[f64]) -> usize {
    let mut best = pool[0];
    for &ue in &pool[1..] {
        if pf[ue] > pf[best] || (pf[ue] == pf[best] && ue < best) {
            best = ue;
        }
    }
    best
}

/// Every AP serves its top-PF UE at full power.
pub fn full_reuse_decide(pools: &[Vec<usize>], pf: &[f64], p_max: f64) -> Vec<ApDecision> {
    pools
        .iter()
        .map(|pool| ApDecision::Serve { ue: top_pf_ue(pool, pf), power_w: p_max })
        .collect()
}

/// Only the AP of UE `t mod K` transmits, to that UE at full power.
pub fn tdm_decide(t: u32, association: &[usize], p_max: f64) -> Vec<ApDecision> {
    let num_aps = association.iter().max().map_or(0, |m| m + 1);
    tdm_decide_n(t, association, num_aps, p_max)
}

pub fn tdm_decide_n(t: u32, association: &[usize], num_aps: usize, p_max: f64) -> Vec<ApDecision> {
    let ue = t as usize % association.len();
    let mut out = vec![ApDecision::Off; num_aps];
    out[association[ue]] = ApDecision::Serve { ue, power_w: p_max };
    out
}

/// An AP's PF-selected UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub ue: usize,
    pub pf: f64,
}

/// Centralized ITLinQ link activation.
///
/// APs are visited in descending PF order of their selected UEs (ties by UE
/// id). The first is always activated; each later AP `i` is activated iff
/// for every already-active AP `k`
///
/// ```text
/// max(P|h_{j_k i}|^2, P|h_{j_i k}|^2) / s2  <  M * (P|h_{j_i i}|^2 / s2)^eta
/// ```
pub fn itlinq_decide(
    power_gains: &[f64],
    selections: &[Selection],
    m_itq: f64,
    eta: f64,
    p_max: f64,
    noise_w: f64,
) -> Vec<ApDecision> {
    let n = selections.len();
    let gain = |ue: usize, ap: usize| power_gains[ue * n + ap];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        selections[b]
            .pf
            .total_cmp(&selections[a].pf)
            .then(selections[a].ue.cmp(&selections[b].ue))
    });

    let mut active: Vec<usize> = Vec::with_capacity(n);
    for &i in &order {
        let ue_i = selections[i].ue;
        let snr = p_max * gain(ue_i, i) / noise_w;
        let threshold = m_itq * snr.powf(eta);
        let admissible = active.iter().all(|&k| {
            let caused = p_max * gain(selections[k].ue, i) / noise_w;
            let received = p_max * gain(ue_i, k) / noise_w;
            caused.max(received) < threshold
        });
        if active.is_empty() || admissible {
            active.push(i);
        }
    }

    let mut out = vec![ApDecision::Off; n];
    for i in active {
        out[i] = ApDecision::Serve { ue: selections[i].ue, power_w: p_max };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_reuse_serves_top_pf_everywhere() {
        let pools = vec![vec![0, 1], vec![2], vec![3, 4, 5], vec![6]];
        let pf = [1.0, 2.0, 0.1, 3.0, 3.0, 0.5, 0.0];
        let d = full_reuse_decide(&pools, &pf, 0.01);
        let served: Vec<_> = d.iter().map(|x| x.served_ue()).collect();
        assert_eq!(served, vec![Some(1), Some(2), Some(3), Some(6)]);
        assert!(d.iter().all(|x| x.power() == 0.01));
    }

    #[test]
    fn top_pf_matches_argmax_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let pf: Vec<f64> = (0..10).map(|_| rng.random_range(0..5) as f64).collect();
            let pool: Vec<usize> = (0..10).filter(|_| rng.random::<bool>()).collect();
            if pool.is_empty() {
                continue;
            }
            let best = top_pf_ue(&pool, &pf);
            assert!(pool.iter().all(|&u| pf[u] < pf[best] || (pf[u] == pf[best] && u >= best)));
        }
    }

    #[test]
    fn tdm_round_robin() {
        let assoc: Vec<usize> = (0..24).map(|u| u % 4).collect();
        let d = tdm_decide(5, &assoc, 0.01);
        assert_eq!(d[1], ApDecision::Serve { ue: 5, power_w: 0.01 });
        assert_eq!(d.iter().filter(|x| !x.is_off()).count(), 1);
        let mut served = vec![0; 24];
        for t in 1..=24 {
            for x in tdm_decide(t, &assoc, 0.01) {
                if let Some(u) = x.served_ue() {
                    served[u] += 1;
                }
            }
        }
        assert!(served.iter().all(|&c| c == 1));
    }

    #[test]
    fn itlinq_single_ap_always_transmits() {
        let d = itlinq_decide(&[1e-20], &[Selection { ue: 0, pf: 0.0 }], 1.0, 0.4, 0.01, 1e-13);
        assert_eq!(d, vec![ApDecision::Serve { ue: 0, power_w: 0.01 }]);
    }

    #[test]
    fn itlinq_orthogonal_links_both_active() {
        let gains = [1e-9, 0.0, 0.0, 1e-9];
        let sel = [Selection { ue: 0, pf: 1.0 }, Selection { ue: 1, pf: 2.0 }];
        let d = itlinq_decide(&gains, &sel, 1.0, 0.4, 0.01, 1e-13);
        assert!(d.iter().all(|x| !x.is_off()));
    }

    #[test]
    fn itlinq_strong_interference_silences_lower_priority() {
        let gains = [1e-9, 1e-9, 1e-9, 1e-9];
        let sel = [Selection { ue: 0, pf: 1.0 }, Selection { ue: 1, pf: 2.0 }];
        let d = itlinq_decide(&gains, &sel, 1.0, 0.4, 0.01, 1e-13);
        assert!(d[0].is_off());
        assert!(!d[1].is_off());
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("tdm".parse::<BaselineKind>().unwrap(), BaselineKind::Tdm);
        assert_eq!("itlinq".parse::<BaselineKind>().unwrap(), BaselineKind::ITLINQ_DEFAULT);
        assert!("other".parse::<BaselineKind>().is_err());
        let json = serde_json::to_string(&BaselineKind::ITLINQ_DEFAULT).unwrap();
        assert_eq!(json, r#"{"itlinq":{"m_itq":1.0,"eta":0.4}}"#);
    }
}
