//! Delayed UE feedback: periodic reports, delivery delay to the serving AP
//! and the extra backhaul delay to remote APs.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub ue: usize,
    pub weight: f64,
    /// Linear SINR.
    pub sinr: f64,
    pub t_measured: u32,
}

/// All UEs' reports generated at one reporting instant, indexed by UE.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBatch {
    pub t_measured: u32,
    pub reports: Vec<FeedbackReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackLog {
    period: u32,
    local_delay: u32,
    remote_delay: u32,
    batches: VecDeque<ReportBatch>,
}

impl FeedbackLog {
    pub fn new(period: u32, feedback_delay: u32, backhaul_delay: u32) -> Self {
        Self {
            period,
            local_delay: feedback_delay,
            remote_delay: feedback_delay + backhaul_delay,
            batches: VecDeque::new(),
        }
    }

    pub fn is_report_time(&self, t: u32) -> bool {
        t % self.period == 0
    }

    pub fn push(&mut self, batch: ReportBatch) {
        debug_assert!(self.batches.back().is_none_or(|b| b.t_measured < batch.t_measured));
        self.batches.push_back(batch);
    }

    fn latest_with_delay(&self, t: u32, delay: u32) -> Option<&ReportBatch> {
        self.batches
            .iter()
            .rev()
            .find(|b| b.t_measured + delay <= t)
    }

    /// Latest batch delivered to serving APs by interval `t`.
    pub fn local_view(&self, t: u32) -> Option<&ReportBatch> {
        self.latest_with_delay(t, self.local_delay)
    }

    /// Latest batch forwarded to remote APs by interval `t`.
    pub fn remote_view(&self, t: u32) -> Option<&ReportBatch> {
        self.latest_with_delay(t, self.remote_delay)
    }

    /// Drops batches that are superseded for both views at `t`.
    pub fn prune(&mut self, t: u32) {
        while self.batches.len() >= 2 && self.batches[1].t_measured + self.remote_delay <= t {
            self.batches.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(t: u32) -> ReportBatch {
        ReportBatch {
            t_measured: t,
            reports: vec![FeedbackReport { ue: 0, weight: t as f64, sinr: 1.0, t_measured: t }],
        }
    }

    #[test]
    fn delivery_timeline() {
        let mut log = FeedbackLog::new(10, 5, 5);
        for t in 1..=40 {
            if log.is_report_time(t) {
                log.push(batch(t));
            }
            log.prune(t);
            let local = log.local_view(t).map(|b| b.t_measured);
            let remote = log.remote_view(t).map(|b| b.t_measured);
            let expect_local = (t >= 15).then(|| ((t - 5) / 10) * 10);
            let expect_remote = (t >= 20).then(|| ((t - 10) / 10) * 10);
            assert_eq!(local, expect_local, "t={t}");
            assert_eq!(remote, expect_remote, "t={t}");
        }
        assert!(log.len() <= 3);
    }

    #[test]
    fn zero_delay_is_immediate() {
        let mut log = FeedbackLog::new(1, 0, 0);
        log.push(batch(1));
        assert_eq!(log.local_view(1).unwrap().t_measured, 1);
        assert_eq!(log.remote_view(1).unwrap().t_measured, 1);
    }
}
