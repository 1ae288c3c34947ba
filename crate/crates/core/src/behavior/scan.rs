//! Forward obstacle scan along a lane-bound vehicle's path.

use serde::{Deserialize, Serialize};

use super::driver::ObstacleObservation;
use crate::model::{ParticipantId, ParticipantState, Polyline};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Gap kept in front of any obstacle (m).
    pub d_margin: f64,
    pub lookahead_m: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            d_margin: 2.0,
            lookahead_m: 80.0,
        }
    }
}

/// Stop line on the ego path that currently binds the driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopLine {
    pub arc: f64,
}

/// Where the ego vehicle is on its path.
#[derive(Debug, Clone, Copy)]
pub struct LaneCorridor<'a> {
    pub path: &'a Polyline,
    pub arc: f64,
    pub lane_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleKind {
    Participant(ParticipantId),
    StopLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanHit {
    pub kind: ObstacleKind,
    pub observation: ObstacleObservation,
}

/// Nearest obstacle ahead of `ego`: a participant whose footprint overlaps
/// the lane corridor, or a binding stop line. `d_stop` is the arc distance
/// minus the margin and the half-lengths, floored at zero.
pub fn obstacle_scan<'a>(
    ego: &ParticipantState,
    corridor: &LaneCorridor<'_>,
    others: impl IntoIterator<Item = &'a ParticipantState>,
    stop_lines: &[StopLine],
    config: &ScanConfig,
) -> Option<ScanHit> {
    let ego_half = ego.dimensions.length / 2.0;
    let ego_yaw = ego.yaw;
    let mut best: Option<ScanHit> = None;
    let mut consider = |hit: ScanHit| {
        if best.is_none_or(|b| hit.observation.d_stop < b.observation.d_stop) {
            best = Some(hit);
        }
    };

    let horizon = corridor.arc + config.lookahead_m;
    for other in others {
        if other.id == ego.id {
            continue;
        }
        let dx = other.position[0] - ego.position[0];
        let dy = other.position[1] - ego.position[1];
        let reach = config.lookahead_m + other.dimensions.length + ego_half;
        if dx * dx + dy * dy > reach * reach {
            continue;
        }
        let Some(proj) = corridor.path.project_within(
            other.xy(),
            corridor.arc,
            horizon + other.dimensions.length,
        ) else {
            continue;
        };
        let ahead = proj.s - corridor.arc;
        if ahead <= 0.0 {
            continue;
        }
        let rel = other.yaw - corridor.path.heading_at(proj.s);
        let (sin, cos) = rel.sin_cos();
        let (half_len, half_wid) = (other.dimensions.length / 2.0, other.dimensions.width / 2.0);
        let lateral_extent = (half_wid * cos).abs() + (half_len * sin).abs();
        let longitudinal_extent = (half_len * cos).abs() + (half_wid * sin).abs();
        if proj.lateral.abs() > corridor.lane_width / 2.0 + lateral_extent {
            continue;
        }
        if ahead - longitudinal_extent > config.lookahead_m {
            continue;
        }
        let d_stop = (ahead - config.d_margin - ego_half - longitudinal_extent).max(0.0);
        let v_obs = other.speed * (other.yaw - ego_yaw).cos() - ego.speed;
        consider(ScanHit {
            kind: ObstacleKind::Participant(other.id),
            observation: ObstacleObservation { d_stop, v_obs },
        });
    }

    for line in stop_lines {
        let ahead = line.arc - corridor.arc;
        if ahead <= ego_half || ahead > config.lookahead_m + ego_half {
            continue;
        }
        let d_stop = (ahead - ego_half - config.d_margin).max(0.0);
        consider(ScanHit {
            kind: ObstacleKind::StopLine,
            observation: ObstacleObservation {
                d_stop,
                v_obs: -ego.speed,
            },
        });
    }
    best
}
