use marl_rrm::harness::pct5_rate;
use marl_rrm::linklevel::{compute_rates, ApDecision};
use marl_rrm::normalize::{map_observation, percentile_thresholds};
use marl_rrm::topology::{associate_max_rsrp, pools_from_association};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    -1.0e3..1.0e3f64
}

proptest! {
    #[test]
    fn mapping_is_monotone_and_on_the_alphabet(
        data in prop::collection::vec(finite(), 2..200),
        levels in 2usize..30,
        a in finite(),
        b in finite(),
    ) {
        let th = percentile_thresholds(&data, levels);
        prop_assert!(th.windows(2).all(|w| w[0] <= w[1]));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (mlo, mhi) = (map_observation(lo, &th), map_observation(hi, &th));
        prop_assert!(mlo <= mhi);
        for m in [mlo, mhi] {
            let scaled = (m + 0.5) * levels as f64;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
            prop_assert!((-0.5..=0.5).contains(&m));
        }
        let max = data.iter().cloned().fold(f64::MIN, f64::max);
        let min = data.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert_eq!(map_observation(max, &th), 0.5);
        prop_assert_eq!(map_observation(min - 1.0, &th), -0.5);
    }

    #[test]
    fn pct5_is_the_fifth_percentile_order_statistic(rates in prop::collection::vec(0.0..50.0f64, 1..300)) {
        let mut sorted = rates.clone();
        sorted.sort_by(f64::total_cmp);
        let idx = rates.len() * 5 / 100;
        let v = pct5_rate(&rates);
        prop_assert_eq!(v, sorted[idx]);
        prop_assert!(rates.iter().filter(|&&r| r < v).count() <= idx);
    }

    #[test]
    fn rates_rise_with_power_and_fall_with_interference(
        gains in prop::collection::vec(1e-12..1e-6f64, 6),
        p1 in 1e-4..1e-2f64,
        p2 in 1e-4..1e-2f64,
    ) {
        // Two APs, three UEs; UE 0 on AP 0, UEs 1 and 2 on AP 1.
        let assoc = [0, 1, 1];
        let noise = 4e-14;
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let serve = |p0: f64, p1: Option<f64>| {
            let d1 = match p1 {
                Some(p) => ApDecision::Serve { ue: 1, power_w: p },
                None => ApDecision::Off,
            };
            compute_rates(&[ApDecision::Serve { ue: 0, power_w: p0 }, d1], &assoc, &gains, noise)
        };
        let weak = serve(lo, None);
        let strong = serve(hi, None);
        prop_assert!(strong.rates[0] >= weak.rates[0]);
        let jammed = serve(hi, Some(hi));
        prop_assert!(jammed.rates[0] <= strong.rates[0]);
        prop_assert!(jammed.interference[0] > 0.0);
        prop_assert_eq!(strong.interference[0], 0.0);
        prop_assert_eq!(jammed.rates[2], 0.0);
        prop_assert!(jammed.rates.iter().all(|r| r.is_finite() && *r >= 0.0));
    }

    #[test]
    fn association_partitions_ues_with_nonempty_pools(
        num_aps in 1usize..6,
        extra in 0usize..12,
        seed_gains in prop::collection::vec(1e-12..1e-3f64, 100),
    ) {
        let num_ues = num_aps + extra;
        let gains: Vec<f64> = seed_gains.iter().cycle().take(num_ues * num_aps).cloned().collect();
        let assoc = associate_max_rsrp(&gains, num_ues, num_aps).unwrap();
        prop_assert_eq!(assoc.len(), num_ues);
        let pools = pools_from_association(&assoc, num_aps);
        prop_assert!(pools.iter().all(|p| !p.is_empty()));
        prop_assert_eq!(pools.iter().map(Vec::len).sum::<usize>(), num_ues);
    }
}
