//! Lost-time analytics: actual travel time minus free-flow travel time.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::model::{ParticipantClass, ParticipantId};

use super::SignalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LostTimeRecord {
    pub id: ParticipantId,
    pub class: ParticipantClass,
    pub t_entry: f64,
    pub t_exit: f64,
    /// Free-flow travel time (s).
    pub free_flow_s: f64,
    pub lost_s: f64,
}

impl LostTimeRecord {
    pub fn actual_s(&self) -> f64 {
        self.t_exit - self.t_entry
    }
}

/// Time-stamped arc positions of one participant, monotone in time.
pub fn lost_time(
    id: ParticipantId,
    class: ParticipantClass,
    trajectory: &[(f64, f64)],
    free_flow_speed: f64,
) -> Result<LostTimeRecord, SignalError> {
    if trajectory.len() < 2 {
        return Err(SignalError::DegenerateTrajectory(format!(
            "participant {id}: {} samples, need at least 2",
            trajectory.len()
        )));
    }
    if !(free_flow_speed > 0.0) {
        return Err(SignalError::DegenerateTrajectory(format!(
            "participant {id}: free-flow speed must be positive"
        )));
    }
    if trajectory.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(SignalError::DegenerateTrajectory(format!(
            "participant {id}: trajectory not monotone in time"
        )));
    }
    let (t_entry, s_entry) = trajectory[0];
    let (t_exit, s_exit) = trajectory[trajectory.len() - 1];
    let free_flow_s = (s_exit - s_entry) / free_flow_speed;
    let lost_s = ((t_exit - t_entry) - free_flow_s).max(0.0);
    Ok(LostTimeRecord {
        id,
        class,
        t_entry,
        t_exit,
        free_flow_s,
        lost_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LostTimeStats {
    pub count: usize,
    pub avg: f64,
    pub max: f64,
    pub min: f64,
}

/// Per-bucket statistics. A bucket without records is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LostTimeSummary {
    pub vru: Option<LostTimeStats>,
    pub vehicles: Option<LostTimeStats>,
    pub all: LostTimeStats,
}

fn stats<'a>(values: impl Iterator<Item = &'a f64>) -> Option<LostTimeStats> {
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for &v in values {
        count += 1;
        sum += v;
        max = max.max(v);
        min = min.min(v);
    }
    (count > 0).then(|| LostTimeStats {
        count,
        avg: sum / count as f64,
        max,
        min,
    })
}

pub fn aggregate_lost_time(records: &[LostTimeRecord]) -> Result<LostTimeSummary, SignalError> {
    let all = stats(records.iter().map(|r| &r.lost_s)).ok_or(SignalError::EmptyInput)?;
    Ok(LostTimeSummary {
        vru: stats(
            records
                .iter()
                .filter(|r| r.class.is_vru())
                .map(|r| &r.lost_s),
        ),
        vehicles: stats(
            records
                .iter()
                .filter(|r| r.class.is_vehicle())
                .map(|r| &r.lost_s),
        ),
        all,
    })
}

pub const LOST_TIME_CSV_HEADER: [&str; 6] =
    ["id", "class", "t_entry", "t_exit", "free_flow_s", "lost_s"];

pub fn write_lost_time_csv<W: Write>(records: &[LostTimeRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOST_TIME_CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.id.to_string(),
            r.class.to_string(),
            r.t_entry.to_string(),
            r.t_exit.to_string(),
            r.free_flow_s.to_string(),
            r.lost_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
