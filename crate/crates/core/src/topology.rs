//! Random deployments, max-RSRP association and nearest-neighbour AP lists.
//!
//! APs and UEs are dropped uniformly over a square area by rejection sampling
//! subject to minimum AP-AP and AP-UE separations. Association assigns each UE
//! to the AP with the strongest long-term received power and then repairs any
//! empty pool so that the pools partition the UE set with no pool empty.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rejection-sampling budget per placed entity.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("invalid deployment config: {0}")]
    InvalidConfig(String),
    #[error("could not place {entity} #{index} after {attempts} attempts")]
    PlacementInfeasible {
        entity: &'static str,
        index: usize,
        attempts: usize,
    },
    #[error("gain matrix has {got} entries, expected {expected}")]
    GainShape { expected: usize, got: usize },
    #[error("gain for UE {ue} / AP {ap} is not strictly positive and finite: {value}")]
    InvalidGain { ue: usize, ap: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeploymentConfig {
    pub num_aps: usize,
    pub num_ues: usize,
    /// Side of the square deployment area in meters.
    pub area_side: f64,
    pub min_ap_ap_dist: f64,
    pub min_ap_ue_dist: f64,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self {
            num_aps: 4,
            num_ues: 24,
            area_side: 500.0,
            min_ap_ap_dist: 35.0,
            min_ap_ue_dist: 10.0,
        }
    }
}

impl DeploymentConfig {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |m: String| Err(TopologyError::InvalidConfig(m));
        if self.num_aps == 0 {
            return bad("num_aps must be at least 1".into());
        }
        if self.num_ues < self.num_aps {
            return bad(format!(
                "num_ues ({}) must be at least num_aps ({})",
                self.num_ues, self.num_aps
            ));
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return bad(format!("area_side must be positive, got {}", self.area_side));
        }
        for (name, v) in [
            ("min_ap_ap_dist", self.min_ap_ap_dist),
            ("min_ap_ue_dist", self.min_ap_ue_dist),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

/// AP and UE positions before association.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub ap_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
}

impl Placement {
    /// Distance matrix, row-major `[ue][ap]`.
    pub fn ue_ap_distances(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.ue_positions.len() * self.ap_positions.len());
        for ue in &self.ue_positions {
            for ap in &self.ap_positions {
                out.push(ue.distance(ap));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub ap_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    /// Serving AP index for every UE.
    pub association: Vec<usize>,
    /// For every AP, the indices of its closest other APs in ascending distance.
    pub remote_agents: Vec<Vec<usize>>,
}

impl Deployment {
    pub fn new(placement: Placement, association: Vec<usize>, num_remote: usize) -> Self {
        let remote_agents = nearest_remote_agents(&placement.ap_positions, num_remote);
        Self {
            ap_positions: placement.ap_positions,
            ue_positions: placement.ue_positions,
            association,
            remote_agents,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    /// UE pools per AP, each sorted by UE index.
    pub fn pools(&self) -> Vec<Vec<usize>> {
        pools_from_association(&self.association, self.num_aps())
    }

    /// Checks that the pools partition the UE set and none is empty.
    pub fn check_partition(&self) -> bool {
        if self.association.len() != self.num_ues() {
            return false;
        }
        if self.association.iter().any(|&ap| ap >= self.num_aps()) {
            return false;
        }
        self.pools().iter().all(|p| !p.is_empty())
    }
}

pub fn pools_from_association(association: &[usize], num_aps: usize) -> Vec<Vec<usize>> {
    let mut pools = vec![Vec::new(); num_aps];
    for (ue, &ap) in association.iter().enumerate() {
        pools[ap].push(ue);
    }
    pools
}

fn sample_point<R: Rng + ?Sized>(rng: &mut R, side: f64) -> Point {
    Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side)
}

/// Draws AP then UE positions by rejection sampling.
pub fn generate_deployment<R: Rng + ?Sized>(
    config: &DeploymentConfig,
    rng: &mut R,
) -> Result<Placement, TopologyError> {
    config.validate()?;
    let diagonal = config.area_side * std::f64::consts::SQRT_2;
    if config.num_aps >= 2 && config.min_ap_ap_dist > diagonal {
        return Err(TopologyError::PlacementInfeasible {
            entity: "AP",
            index: 1,
            attempts: 0,
        });
    }

    let mut aps: Vec<Point> = Vec::with_capacity(config.num_aps);
    for index in 0..config.num_aps {
        let p = place(rng, config.area_side, |p| {
            aps.iter().all(|a| a.distance(p) >= config.min_ap_ap_dist)
        })
        .ok_or(TopologyError::PlacementInfeasible {
            entity: "AP",
            index,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        aps.push(p);
    }

    let mut ues = Vec::with_capacity(config.num_ues);
    for index in 0..config.num_ues {
        let p = place(rng, config.area_side, |p| {
            aps.iter().all(|a| a.distance(p) >= config.min_ap_ue_dist)
        })
        .ok_or(TopologyError::PlacementInfeasible {
            entity: "UE",
            index,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        ues.push(p);
    }

    Ok(Placement {
        ap_positions: aps,
        ue_positions: ues,
    })
}

fn place<R, F>(rng: &mut R, side: f64, accept: F) -> Option<Point>
where
    R: Rng + ?Sized,
    F: Fn(&Point) -> bool,
{
    (0..MAX_PLACEMENT_ATTEMPTS)
        .map(|_| sample_point(rng, side))
        .find(|p| accept(p))
}

/// Max-RSRP association over a row-major `[ue][ap]` matrix of linear power
/// gains. Since every AP transmits at the same maximum power, comparing gains
/// is equivalent to comparing RSRP.
///
/// Ties go to the lowest AP index. Afterwards, while some pool is empty, the
/// UE (taken from a pool holding at least two UEs) with the strongest gain
/// toward the empty AP is moved into it.
pub fn associate_max_rsrp(
    power_gains: &[f64],
    num_ues: usize,
    num_aps: usize,
) -> Result<Vec<usize>, TopologyError> {
    if power_gains.len() != num_ues * num_aps {
        return Err(TopologyError::GainShape {
            expected: num_ues * num_aps,
            got: power_gains.len(),
        });
    }
    if num_aps == 0 || num_ues < num_aps {
        return Err(TopologyError::InvalidConfig(format!(
            "cannot associate {num_ues} UEs to {num_aps} APs with no empty pool"
        )));
    }
    for (idx, &g) in power_gains.iter().enumerate() {
        if !(g > 0.0 && g.is_finite()) {
            return Err(TopologyError::InvalidGain {
                ue: idx / num_aps,
                ap: idx % num_aps,
                value: g,
            });
        }
    }

    let gain = |ue: usize, ap: usize| power_gains[ue * num_aps + ap];
    let mut association: Vec<usize> = (0..num_ues)
        .map(|ue| {
            (1..num_aps).fold(0, |best, ap| {
                if gain(ue, ap) > gain(ue, best) {
                    ap
                } else {
                    best
                }
            })
        })
        .collect();

    let mut sizes = vec![0usize; num_aps];
    for &ap in &association {
        sizes[ap] += 1;
    }
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let mover = (0..num_ues)
            .filter(|&ue| sizes[association[ue]] >= 2)
            .fold(None, |best: Option<usize>, ue| match best {
                Some(b) if gain(b, empty) >= gain(ue, empty) => Some(b),
                _ => Some(ue),
            })
            .expect("K >= N guarantees a pool with at least two UEs");
        sizes[association[mover]] -= 1;
        association[mover] = empty;
        sizes[empty] += 1;
    }
    Ok(association)
}

/// Capacity-constrained max-RSRP: every AP receives exactly `per_ap` UEs.
///
/// Pairs are admitted greedily in descending gain order (ties by UE then AP
/// index). Requires `num_ues == num_aps * per_ap`.
pub fn associate_balanced(
    power_gains: &[f64],
    num_ues: usize,
    num_aps: usize,
    per_ap: usize,
) -> Result<Vec<usize>, TopologyError> {
    if num_ues != num_aps * per_ap {
        return Err(TopologyError::InvalidConfig(format!(
            "balanced association needs num_ues = num_aps * {per_ap}, got {num_ues} UEs and {num_aps} APs"
        )));
    }
    if power_gains.len() != num_ues * num_aps {
        return Err(TopologyError::GainShape {
            expected: num_ues * num_aps,
            got: power_gains.len(),
        });
    }
    let mut pairs: Vec<(usize, usize)> = (0..num_ues)
        .flat_map(|ue| (0..num_aps).map(move |ap| (ue, ap)))
        .collect();
    pairs.sort_by(|a, b| {
        power_gains[b.0 * num_aps + b.1]
            .total_cmp(&power_gains[a.0 * num_aps + a.1])
            .then(a.cmp(b))
    });
    let mut association = vec![usize::MAX; num_ues];
    let mut load = vec![0usize; num_aps];
    for (ue, ap) in pairs {
        if association[ue] == usize::MAX && load[ap] < per_ap {
            association[ue] = ap;
            load[ap] += 1;
        }
    }
    Ok(association)
}

/// For every AP, up to `n` other APs ordered by ascending distance; equal
/// distances are ordered by index.
pub fn nearest_remote_agents(ap_positions: &[Point], n: usize) -> Vec<Vec<usize>> {
    ap_positions
        .iter()
        .enumerate()
        .map(|(i, pi)| {
            let mut others: Vec<(f64, usize)> = ap_positions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, pj)| (pi.distance(pj), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(n).map(|(_, j)| j).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_layout_respects_separations() {
        let cfg = DeploymentConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = generate_deployment(&cfg, &mut rng).unwrap();
        assert_eq!(p.ap_positions.len(), 4);
        assert_eq!(p.ue_positions.len(), 24);
        for (i, a) in p.ap_positions.iter().enumerate() {
            for b in &p.ap_positions[i + 1..] {
                assert!(a.distance(b) >= 35.0);
            }
            for u in &p.ue_positions {
                assert!(a.distance(u) >= 10.0);
            }
        }
        for q in p.ap_positions.iter().chain(&p.ue_positions) {
            assert!((0.0..=500.0).contains(&q.x) && (0.0..=500.0).contains(&q.y));
        }
    }

    #[test]
    fn single_ap_single_ue_unconstrained() {
        let cfg = DeploymentConfig {
            num_aps: 1,
            num_ues: 1,
            min_ap_ap_dist: 0.0,
            min_ap_ue_dist: 0.0,
            ..Default::default()
        };
        for seed in 0..20 {
            let p = generate_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!((p.ap_positions.len(), p.ue_positions.len()), (1, 1));
        }
    }

    #[test]
    fn over_constrained_layout_is_rejected() {
        let cfg = DeploymentConfig {
            num_aps: 2,
            num_ues: 2,
            area_side: 10.0,
            min_ap_ap_dist: 100.0,
            min_ap_ue_dist: 0.0,
        };
        let err = generate_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err();
        assert!(matches!(err, TopologyError::PlacementInfeasible { .. }));

        // Below the diagonal but still infeasible: sampling gives up.
        let cfg = DeploymentConfig {
            num_aps: 3,
            area_side: 10.0,
            min_ap_ap_dist: 13.0,
            num_ues: 3,
            min_ap_ue_dist: 0.0,
        };
        let err = generate_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err();
        assert!(matches!(
            err,
            TopologyError::PlacementInfeasible { entity: "AP", attempts: MAX_PLACEMENT_ATTEMPTS, .. }
        ));
    }

    #[test]
    fn invalid_configs() {
        let base = DeploymentConfig::default();
        for cfg in [
            DeploymentConfig { num_aps: 0, ..base.clone() },
            DeploymentConfig { num_ues: 3, ..base.clone() },
            DeploymentConfig { area_side: 0.0, ..base.clone() },
            DeploymentConfig { min_ap_ue_dist: -1.0, ..base.clone() },
        ] {
            assert!(matches!(cfg.validate(), Err(TopologyError::InvalidConfig(_))));
        }
    }

    #[test]
    fn dominant_column_wins() {
        // 3 UEs x 2 APs
        let gains = [1e-6, 1e-9, 1e-9, 1e-6, 1e-6, 1e-8];
        assert_eq!(associate_max_rsrp(&gains, 3, 2).unwrap(), vec![0, 1, 0]);
    }

    #[test]
    fn equal_gains_go_to_lowest_index() {
        let gains = [1e-7, 1e-7, 1e-9, 1e-6];
        assert_eq!(associate_max_rsrp(&gains, 2, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn empty_pool_repair_moves_best_candidate() {
        // All UEs prefer AP 0; UE 1 has the best gain toward AP 1.
        let gains = [1e-5, 1e-9, 1e-5, 1e-7, 1e-5, 1e-8];
        let assoc = associate_max_rsrp(&gains, 3, 2).unwrap();
        assert_eq!(assoc, vec![0, 1, 0]);

        // Brute force: among all single reassignments into AP 1, the chosen
        // one maximizes the moved UE's gain toward AP 1.
        let best = (0..3)
            .max_by(|&a, &b| gains[a * 2 + 1].total_cmp(&gains[b * 2 + 1]))
            .unwrap();
        assert_eq!(assoc[best], 1);
    }

    #[test]
    fn rejects_non_positive_gains() {
        let err = associate_max_rsrp(&[1.0, 0.0, 1.0, 1.0], 2, 2).unwrap_err();
        assert!(matches!(err, TopologyError::InvalidGain { ue: 0, ap: 1, .. }));
        assert!(associate_max_rsrp(&[1.0, 1.0, f64::NAN, 1.0], 2, 2).is_err());
    }

    #[test]
    fn balanced_association_fills_every_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gains: Vec<f64> = (0..12 * 4).map(|_| rng.random::<f64>() + 1e-3).collect();
        let assoc = associate_balanced(&gains, 12, 4, 3).unwrap();
        let pools = pools_from_association(&assoc, 4);
        assert!(pools.iter().all(|p| p.len() == 3));
    }

    #[test]
    fn remote_lists_on_a_line() {
        let aps: Vec<Point> = [0.0, 10.0, 20.0, 40.0]
            .iter()
            .map(|&x| Point::new(x, 0.0))
            .collect();
        let r = nearest_remote_agents(&aps, 3);
        assert_eq!(r[0], vec![1, 2, 3]);
        assert_eq!(r[1], vec![0, 2, 3]);
        assert_eq!(r[2], vec![1, 0, 3]);
        assert_eq!(r[3], vec![2, 1, 0]);
        assert!(nearest_remote_agents(&aps[..1], 3)[0].is_empty());
        assert_eq!(nearest_remote_agents(&aps, 1)[3], vec![2]);
    }

    #[test]
    fn remote_lists_match_all_pairs_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let aps: Vec<Point> = (0..4).map(|_| sample_point(&mut rng, 500.0)).collect();
            let got = nearest_remote_agents(&aps, 3);
            for i in 0..4 {
                // exhaustive: count APs strictly closer for every candidate
                let mut expected: Vec<usize> = (0..4).filter(|&j| j != i).collect();
                expected.sort_by_key(|&j| {
                    (0..4)
                        .filter(|&m| m != i && m != j)
                        .filter(|&m| {
                            let dm = aps[i].distance(&aps[m]);
                            let dj = aps[i].distance(&aps[j]);
                            dm < dj || (dm == dj && m < j)
                        })
                        .count()
                });
                assert_eq!(got[i], expected);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = DeploymentConfig::default();
        let a = generate_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let b = generate_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a, b);
    }
}
