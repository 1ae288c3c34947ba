//! CAM- and SPaT-like messages as plain JSON records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Dimensions, GeoAnchor, ParticipantClass, ParticipantId, ParticipantState};
use crate::signals::{SignalController, SignalState};

pub const DEFAULT_CAM_RATE_HZ: f64 = 10.0;

/// Slack on the rate interval so frame times that are multiples of the
/// interval are not rejected by rounding.
const RATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamMessage {
    /// Emitter-wide sequence number, used as message reference in verdicts.
    pub seq: u64,
    pub station_id: ParticipantId,
    pub timestamp: f64,
    pub class: ParticipantClass,
    pub lat: f64,
    pub lon: f64,
    pub speed: f64,
    pub heading: f64,
    pub dimensions: Dimensions,
}

/// Per-station rate-limited CAM generation.
#[derive(Debug, Clone)]
pub struct CamEmitter {
    anchor: GeoAnchor,
    interval: f64,
    last: BTreeMap<ParticipantId, f64>,
    seq: u64,
}

impl CamEmitter {
    pub fn new(anchor: GeoAnchor, rate_hz: f64) -> Self {
        assert!(rate_hz > 0.0, "CAM rate must be positive");
        Self {
            anchor,
            interval: 1.0 / rate_hz,
            last: BTreeMap::new(),
            seq: 0,
        }
    }

    /// A CAM for `state`, or `None` when the station already sent one
    /// within the rate interval.
    pub fn emit(&mut self, state: &ParticipantState) -> Option<CamMessage> {
        if let Some(&last) = self.last.get(&state.id) {
            if state.timestamp - last < self.interval - RATE_EPS {
                return None;
            }
        }
        self.last.insert(state.id, state.timestamp);
        let geo = self.anchor.enu_to_geo(state.position);
        self.seq += 1;
        Some(CamMessage {
            seq: self.seq,
            station_id: state.id,
            timestamp: state.timestamp,
            class: state.class,
            lat: geo.lat,
            lon: geo.lon,
            speed: state.speed,
            heading: state.yaw,
            dimensions: state.dimensions,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatGroup {
    pub group: String,
    pub state: SignalState,
    pub time_to_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatMessage {
    pub intersection_id: String,
    pub timestamp: f64,
    pub groups: Vec<SpatGroup>,
}

/// Snapshot of the controller at time `t`.
pub fn emit_spat(controller: &SignalController, intersection_id: &str, t: f64) -> SpatMessage {
    let groups = controller
        .states()
        .into_iter()
        .map(|(group, state)| {
            let time_to_change = controller.time_to_change(&group, t).unwrap_or(0.0);
            SpatGroup {
                group,
                state,
                time_to_change,
            }
        })
        .collect();
    SpatMessage {
        intersection_id: intersection_id.into(),
        timestamp: t,
        groups,
    }
}
