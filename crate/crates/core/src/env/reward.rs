use crate::linklevel::ApDecision;

/// Weighted sum-rate reward shared by all agents, with the two overrides:
///
/// * all agents off: the agent whose top UE has the highest PF ratio in the
///   network gets minus that ratio, every other agent gets zero;
/// * an agent that selected an empty slot gets zero.
///
/// `served_weights[i]` is the weight of AP `i`'s served UE as last reported
/// to that AP; it is ignored for silent APs.
pub fn compute_reward(
    decisions: &[ApDecision],
    rates: &[f64],
    served_weights: &[f64],
    reward_exponent: f64,
    invalid: &[bool],
    top_pf: &[f64],
) -> Vec<f64> {
    let n = decisions.len();
    let mut rewards = if decisions.iter().all(ApDecision::is_off) {
        let mut r = vec![0.0; n];
        let worst = (1..n).fold(0, |best, i| if top_pf[i] > top_pf[best] { i } else { best });
        if n > 0 {
            r[worst] = -top_pf[worst];
        }
        r
    } else {
        let total: f64 = decisions
            .iter()
            .enumerate()
            .filter_map(|(ap, d)| d.served_ue().map(|ue| (ap, ue)))
            .map(|(ap, ue)| served_weights[ap].powf(reward_exponent) * rates[ue])
            .sum();
        vec![total; n]
    };
    for (r, &bad) in rewards.iter_mut().zip(invalid) {
        if bad {
            *r = 0.0;
        }
    }
    rewards
}

#[cfg(test)]
mod tests {
    use super::*;

    fn serve(ue: usize) -> ApDecision {
        ApDecision::Serve { ue, power_w: 0.01 }
    }

    #[test]
    fn zero_exponent_is_sum_rate() {
        let r = compute_reward(&[serve(0), serve(1)], &[2.0, 3.0], &[7.0, 0.5], 0.0, &[false; 2], &[1.0; 2]);
        assert_eq!(r, vec![5.0, 5.0]);
    }

    #[test]
    fn weighted_sum() {
        let r = compute_reward(
            &[serve(0), ApDecision::Off, serve(2)],
            &[2.0, 0.0, 3.0],
            &[4.0, 9.0, 1.0],
            0.5,
            &[false; 3],
            &[0.0; 3],
        );
        assert!(r.iter().all(|&x| (x - 7.0).abs() < 1e-12));
    }

    #[test]
    fn all_off_penalizes_highest_top_pf() {
        let r = compute_reward(&[ApDecision::Off; 4], &[0.0; 8], &[0.0; 4], 0.8, &[false; 4], &[0.3, 1.2, 1.7, 0.9]);
        assert_eq!(r, vec![0.0, 0.0, -1.7, 0.0]);
    }

    #[test]
    fn invalid_agent_gets_zero() {
        let r = compute_reward(
            &[serve(0), ApDecision::Off, serve(2)],
            &[2.0, 0.0, 2.2],
            &[1.0, 1.0, 1.0],
            0.8,
            &[false, true, false],
            &[0.0; 3],
        );
        assert_eq!(r, vec![4.2, 0.0, 4.2]);
    }

    #[test]
    fn invalid_overrides_all_off_penalty() {
        let r = compute_reward(&[ApDecision::Off; 2], &[0.0; 2], &[0.0; 2], 0.8, &[true, false], &[3.0, 1.0]);
        assert_eq!(r, vec![0.0, 0.0]);
    }
}
