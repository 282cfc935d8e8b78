//! Interferer profile, decision logs and Pareto fronts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::{dominates, EnvSet, HarnessError, MetricsSummary};
use crate::env::{decode_action, EnvConfig, Environment};
use crate::linklevel::{linear_to_db, ApDecision};
use crate::scheduler::{apply, Schedule, Scheduler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Number of interfering APs included, closest to the serving AP first.
    pub interferers: usize,
    pub mean_sinr_db: f64,
}

/// Mean long-term SINR (dB, averaged over UEs and realizations) with all APs
/// at full power when only the `n` APs closest to each UE's serving AP
/// interfere, for every `n` in `n_values`.
pub fn interference_profile<R: Rng + ?Sized>(
    env_config: &EnvConfig,
    n_values: &[usize],
    num_realizations: usize,
    rng: &mut R,
) -> Result<Vec<ProfilePoint>, HarnessError> {
    let num_aps = env_config.deployment.num_aps;
    if let Some(&n) = n_values.iter().find(|&&n| n >= num_aps) {
        return Err(HarnessError::InvalidArgument(format!(
            "{n} interferers requested but only {} other APs exist",
            num_aps - 1
        )));
    }
    if num_realizations == 0 {
        return Err(HarnessError::InvalidArgument("need at least one realization".into()));
    }
    let seeds: Vec<u64> = (0..num_realizations).map(|_| rng.random()).collect();
    let p = env_config.radio.p_max_w();
    let noise = env_config.radio.noise_w();
    let per_realization: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let env = Environment::new(env_config.clone(), seed)?;
            let lt = &env.channel().long_term;
            let dep = env.deployment();
            // all other APs ordered by distance from each AP
            let neighbours = crate::topology::nearest_remote_agents(&dep.ap_positions, num_aps - 1);
            let sums = n_values
                .iter()
                .map(|&n| {
                    (0..lt.num_ues)
                        .map(|ue| {
                            let serving = dep.association[ue];
                            let interference: f64 = neighbours[serving][..n]
                                .iter()
                                .map(|&ap| p * lt.power(ue, ap))
                                .sum();
                            linear_to_db(p * lt.power(ue, serving) / (noise + interference))
                        })
                        .sum::<f64>()
                })
                .collect();
            Ok(sums)
        })
        .collect::<Result<_, HarnessError>>()?;
    let count = (num_realizations * env_config.deployment.num_ues) as f64;
    Ok(n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| ProfilePoint {
            interferers: n,
            mean_sinr_db: per_realization.iter().map(|r| r[i]).sum::<f64>() / count,
        })
        .collect())
}

/// One agent's raw inputs and chosen action at one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub env: usize,
    pub seed: u64,
    pub t: u32,
    pub agent: usize,
    pub top_weight: f64,
    pub top_sinr_db: f64,
    /// PF ratios of the local slots, best first.
    pub local_pf: Vec<f64>,
    /// PF ratio of the top UE of each remote block.
    pub remote_pf: Vec<f64>,
    pub action: usize,
    /// `off`, `serve` or `invalid`.
    pub decision: String,
    pub ue: Option<usize>,
}

/// Rolls out `make(i)` on every member of `set` and records every agent's
/// decision at every interval, in (env, t, agent) order.
pub fn export_decision_log<S, F>(set: &EnvSet, make: F) -> Result<Vec<DecisionRow>, HarnessError>
where
    S: Scheduler,
    F: Fn(usize) -> S + Sync,
{
    let parts: Vec<Vec<DecisionRow>> = (0..set.len())
        .into_par_iter()
        .map(|i| {
            let mut env = set.instantiate(i)?;
            let mut policy = make(i);
            let mut rows = Vec::new();
            while !env.is_done() {
                let t = env.t();
                let Schedule::Actions(actions) = policy.schedule(&env) else {
                    return Err(HarnessError::InvalidArgument(
                        "decision logs need an action-based policy".into(),
                    ));
                };
                for (agent, (obs, &action)) in env.observations().iter().zip(&actions).enumerate() {
                    let decoded = decode_action(action, obs, env.power_levels_w())?;
                    let (decision, ue) = match decoded.decision {
                        _ if decoded.invalid => ("invalid", None),
                        ApDecision::Off => ("off", None),
                        ApDecision::Serve { ue, .. } => ("serve", Some(ue)),
                    };
                    rows.push(DecisionRow {
                        env: i,
                        seed: set.seeds[i],
                        t,
                        agent,
                        top_weight: obs.weight(0),
                        top_sinr_db: obs.sinr_db(0),
                        local_pf: obs.pf[..obs.top_k].to_vec(),
                        remote_pf: obs.remote_top_pf(),
                        action,
                        decision: decision.into(),
                        ue,
                    });
                }
                apply(&mut env, &Schedule::Actions(actions))?;
            }
            Ok(rows)
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn write_decision_log<W: Write>(rows: &[DecisionRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let k = rows.first().map_or(0, |r| r.local_pf.len());
    let n = rows.first().map_or(0, |r| r.remote_pf.len());
    let mut header: Vec<String> = ["env", "seed", "t", "agent", "top_weight", "top_sinr_db"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=k).map(|i| format!("local_pf_{i}")));
    header.extend((1..=n).map(|i| format!("remote_pf_{i}")));
    header.extend(["action", "decision", "ue"].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.env.to_string(),
            r.seed.to_string(),
            r.t.to_string(),
            r.agent.to_string(),
            r.top_weight.to_string(),
            r.top_sinr_db.to_string(),
        ];
        rec.extend(r.local_pf.iter().map(|v| v.to_string()));
        rec.extend(r.remote_pf.iter().map(|v| v.to_string()));
        rec.push(r.action.to_string());
        rec.push(r.decision.clone());
        rec.push(r.ue.map_or(String::new(), |u| u.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// For each point, whether no other point dominates it.
pub fn pareto_front(points: &[MetricsSummary]) -> Vec<bool> {
    points
        .iter()
        .map(|p| !points.iter().any(|q| dominates(q, p)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqn::RandomPolicy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profile_is_non_increasing_and_starts_at_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = EnvConfig::default();
        let pts = interference_profile(&cfg, &[0, 1, 2, 3], 20, &mut rng).unwrap();
        assert!(pts.windows(2).all(|w| w[1].mean_sinr_db <= w[0].mean_sinr_db));
        assert!(interference_profile(&cfg, &[4], 1, &mut rng).is_err());
    }

    #[test]
    fn decision_log_shape_and_replay() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut cfg = EnvConfig::default();
        cfg.episode_len = 50;
        let set = EnvSet::random(cfg, 2, &mut rng);
        let rows = export_decision_log(&set, |i| RandomPolicy::new(i as u64)).unwrap();
        assert_eq!(rows.len(), 4 * 50 * 2);
        assert!(rows.iter().all(|r| r.action <= 3));

        // replay env 0 and compare labels with the decisions actually applied
        let mut env = set.instantiate(0).unwrap();
        let mut policy = RandomPolicy::new(0);
        for chunk in rows[..200].chunks(4) {
            let Schedule::Actions(a) = policy.schedule(&env) else { unreachable!() };
            assert_eq!(a, chunk.iter().map(|r| r.action).collect::<Vec<_>>());
            let out = apply(&mut env, &Schedule::Actions(a)).unwrap();
            for (r, d) in chunk.iter().zip(&out.info.decisions) {
                assert_eq!(r.ue, d.served_ue());
                assert_eq!(r.decision == "serve", !d.is_off());
            }
        }

        let mut csv_out = Vec::new();
        write_decision_log(&rows, &mut csv_out).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        assert_eq!(text.lines().count(), rows.len() + 1);
        assert!(text.starts_with("env,seed,t,agent,top_weight,top_sinr_db,local_pf_1"));
    }

    #[test]
    fn pareto_flags() {
        let m = |s, p| MetricsSummary { sum_rate: s, pct5_rate: p, score: 0.0 };
        let pts = [m(5.0, 1.0), m(4.0, 2.0), m(3.0, 0.5), m(5.0, 1.0)];
        assert_eq!(pareto_front(&pts), vec![true, true, false, true]);
    }
}
