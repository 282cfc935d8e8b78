use serde::{Deserialize, Serialize};
use std::io::Write;

use super::StepOutcome;
use crate::linklevel::{watts_to_dbm, ApDecision};

/// One AP's decision in one interval, as exported to CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u32,
    pub ap: usize,
    pub action: Option<usize>,
    pub ue: Option<usize>,
    pub power_dbm: Option<f64>,
    pub rate_bpshz: f64,
    pub reward: f64,
}

impl TraceRow {
    /// Rows for the step taken at interval `t`. `actions` is `None` when the
    /// step was driven by direct decisions (baselines).
    pub fn from_step(t: u32, actions: Option<&[usize]>, outcome: &StepOutcome) -> Vec<TraceRow> {
        outcome
            .info
            .decisions
            .iter()
            .enumerate()
            .map(|(ap, d)| {
                let (ue, power_dbm, rate) = match *d {
                    ApDecision::Off => (None, None, 0.0),
                    ApDecision::Serve { ue, power_w } => {
                        (Some(ue), Some(watts_to_dbm(power_w)), outcome.info.rates[ue])
                    }
                };
                TraceRow {
                    t,
                    ap,
                    action: actions.map(|a| a[ap]),
                    ue,
                    power_dbm,
                    rate_bpshz: rate,
                    reward: outcome.rewards[ap],
                }
            })
            .collect()
    }
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
