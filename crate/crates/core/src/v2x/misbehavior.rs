//! Plausibility checks on CAM streams.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::messages::CamMessage;
use crate::model::{wgs84_to_mercator, GeoAnchor, ParticipantId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityConfig {
    pub max_speed: f64,
    pub max_accel: f64,
    /// Speed allowance added to the claimed speeds for the position check.
    pub position_margin_mps: f64,
    pub r_confirm_m: f64,
    /// Consecutive unconfirmed CAMs before the perception check fires.
    pub confirm_frames: usize,
}

impl Default for PlausibilityConfig {
    fn default() -> Self {
        Self {
            max_speed: 70.0,
            max_accel: 12.0,
            position_margin_mps: 3.0,
            r_confirm_m: 3.0,
            confirm_frames: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// Claimed speed above the physical bound.
    R1,
    /// Speed change between consecutive messages too fast.
    R2,
    /// Position jump larger than the claimed speeds allow.
    R3,
    /// Claimed position not confirmed by infrastructure perception.
    R4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Sequence numbers of the offending messages.
    pub messages: Vec<u64>,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisbehaviorVerdict {
    pub station_id: ParticipantId,
    pub rule: Rule,
    pub severity: Severity,
    pub timestamp: f64,
    pub evidence: Evidence,
}

/// Objects seen by infrastructure sensors at one instant, local ENU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionFrame {
    pub t: f64,
    pub objects: Vec<[f64; 2]>,
}

fn severity(measured: f64, bound: f64) -> Severity {
    let ratio = measured / bound;
    if ratio >= 2.0 {
        Severity::High
    } else if ratio >= 1.25 {
        Severity::Medium
    } else {
        Severity::Low
    }
}

/// Perception frame closest to `t`, if one lies within `tol`.
fn frame_at(perception: &[PerceptionFrame], t: f64, tol: f64) -> Option<&PerceptionFrame> {
    let i = perception.partition_point(|f| f.t < t);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter_map(|j| perception.get(j))
        .filter(|f| (f.t - t).abs() <= tol)
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
}

/// Runs R1 to R4 over every station's stream. Messages are grouped by
/// station and ordered by timestamp; `perception` must be sorted by time.
/// A perception frame further than half the smallest message spacing from a
/// CAM leaves that CAM unchecked by R4.
pub fn plausibility_check(
    cams: &[CamMessage],
    perception: &[PerceptionFrame],
    anchor: &GeoAnchor,
    cfg: &PlausibilityConfig,
) -> Vec<MisbehaviorVerdict> {
    let mut streams: BTreeMap<ParticipantId, Vec<&CamMessage>> = BTreeMap::new();
    for c in cams {
        streams.entry(c.station_id).or_default().push(c);
    }
    let mut out = Vec::new();
    for (station, mut msgs) in streams {
        msgs.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp).then(a.seq.cmp(&b.seq)));
        let enu: Vec<[f64; 2]> = msgs
            .iter()
            .map(|m| {
                let (x, y) = wgs84_to_mercator(m.lat, m.lon).unwrap_or((f64::NAN, f64::NAN));
                anchor.mercator_to_enu(x, y)
            })
            .collect();
        let mut verdict = |rule, t, messages: Vec<u64>, measured: f64, bound: f64| {
            out.push(MisbehaviorVerdict {
                station_id: station,
                rule,
                severity: severity(measured, bound),
                timestamp: t,
                evidence: Evidence {
                    messages,
                    measured,
                    bound,
                },
            });
        };
        for (i, m) in msgs.iter().enumerate() {
            if !(m.speed.abs() <= cfg.max_speed) {
                verdict(
                    Rule::R1,
                    m.timestamp,
                    vec![m.seq],
                    m.speed.abs(),
                    cfg.max_speed,
                );
            }
            let Some(prev) = i.checked_sub(1).map(|j| msgs[j]) else {
                continue;
            };
            let dt = m.timestamp - prev.timestamp;
            if dt <= 0.0 {
                continue;
            }
            let accel = (m.speed - prev.speed).abs() / dt;
            if !(accel <= cfg.max_accel) {
                verdict(
                    Rule::R2,
                    m.timestamp,
                    vec![prev.seq, m.seq],
                    accel,
                    cfg.max_accel,
                );
            }
            let (a, b) = (enu[i - 1], enu[i]);
            let disp = (b[0] - a[0]).hypot(b[1] - a[1]);
            let bound = (prev.speed.abs().max(m.speed.abs()) + cfg.position_margin_mps) * dt;
            if !(disp <= bound) {
                verdict(Rule::R3, m.timestamp, vec![prev.seq, m.seq], disp, bound);
            }
        }

        let spacing = msgs
            .windows(2)
            .map(|w| w[1].timestamp - w[0].timestamp)
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let tol = if spacing.is_finite() {
            spacing / 2.0
        } else {
            0.5
        };
        let mut streak: Vec<u64> = Vec::new();
        let mut reported = false;
        for (m, p) in msgs.iter().zip(&enu) {
            let Some(frame) = frame_at(perception, m.timestamp, tol) else {
                continue;
            };
            let nearest = frame
                .objects
                .iter()
                .map(|o| (o[0] - p[0]).hypot(o[1] - p[1]))
                .fold(f64::INFINITY, f64::min);
            if nearest <= cfg.r_confirm_m {
                streak.clear();
                reported = false;
                continue;
            }
            streak.push(m.seq);
            if !reported && streak.len() >= cfg.confirm_frames.max(1) {
                let measured = streak.len() as f64;
                verdict(
                    Rule::R4,
                    m.timestamp,
                    streak.clone(),
                    measured,
                    cfg.confirm_frames as f64,
                );
                reported = true;
            }
        }
    }
    out
}
