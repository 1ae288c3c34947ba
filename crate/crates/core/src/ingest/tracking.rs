//! Global-nearest-neighbour tracking with constant-velocity prediction.

use serde::{Deserialize, Serialize};

use super::fusion::FusedPoint;
use crate::model::{normalize_yaw, ParticipantClass};

/// Displacements shorter than this keep the previous heading.
const MIN_HEADING_DISPLACEMENT_M: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    pub position: [f64; 2],
    pub speed: f64,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub cameras: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    pub class: ParticipantClass,
    pub history: Vec<TrackPoint>,
    pub missed: u32,
}

impl Track {
    pub fn last(&self) -> &TrackPoint {
        self.history.last().expect("tracks are never empty")
    }

    /// Constant-velocity position at time `t`.
    pub fn predict(&self, t: f64) -> [f64; 2] {
        let last = self.last();
        match self.history.len() {
            0 | 1 => last.position,
            n => {
                let prev = &self.history[n - 2];
                let dt = last.t - prev.t;
                if dt <= 0.0 {
                    return last.position;
                }
                let h = t - last.t;
                [
                    last.position[0] + (last.position[0] - prev.position[0]) / dt * h,
                    last.position[1] + (last.position[1] - prev.position[1]) / dt * h,
                ]
            }
        }
    }

    fn append(&mut self, t: f64, point: &FusedPoint) {
        let last = *self.last();
        let dt = t - last.t;
        let (dx, dy) = (
            point.point[0] - last.position[0],
            point.point[1] - last.position[1],
        );
        let dist = dx.hypot(dy);
        let speed = if dt > 0.0 { dist / dt } else { last.speed };
        let yaw = if dist > MIN_HEADING_DISPLACEMENT_M {
            dy.atan2(dx)
        } else {
            last.yaw
        };
        let yaw_rate = if self.history.len() >= 2 && dt > 0.0 {
            normalize_yaw(yaw - last.yaw) / dt
        } else {
            0.0
        };
        if self.history.len() == 1 {
            // the first point takes the heading and speed of the first segment
            let first = &mut self.history[0];
            first.speed = speed;
            first.yaw = yaw;
        }
        self.history.push(TrackPoint {
            t,
            position: point.point,
            speed,
            yaw,
            yaw_rate,
            cameras: point.cameras.len(),
        });
        self.missed = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerParams {
    /// Largest accepted distance between prediction and detection.
    pub gate_m: f64,
    /// Frames a track may go unmatched before it is closed.
    pub max_missed: u32,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            gate_m: 3.0,
            max_missed: 5,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tracker {
    params: TrackerParams,
    next_id: u64,
    live: Vec<Track>,
    closed: Vec<Track>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            next_id: 1,
            live: Vec::new(),
            closed: Vec::new(),
        }
    }

    pub fn live(&self) -> &[Track] {
        &self.live
    }

    pub fn closed(&self) -> &[Track] {
        &self.closed
    }

    /// All tracks, closed and live, ordered by id.
    pub fn into_tracks(self) -> Vec<Track> {
        let mut all = self.closed;
        all.extend(self.live);
        all.sort_by_key(|t| t.id);
        all
    }

    /// Associates the fused points observed at time `t`. Candidate pairs of
    /// equal class are accepted greedily by increasing distance between
    /// prediction and detection, up to the gate.
    pub fn step(&mut self, t: f64, points: &[FusedPoint]) {
        let mut pairs = Vec::new();
        for (ti, track) in self.live.iter().enumerate() {
            let p = track.predict(t);
            for (di, d) in points.iter().enumerate() {
                if d.class != track.class {
                    continue;
                }
                let dist = (d.point[0] - p[0]).hypot(d.point[1] - p[1]);
                if dist <= self.params.gate_m {
                    pairs.push((dist, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = vec![false; self.live.len()];
        let mut det_used = vec![false; points.len()];
        for (_, ti, di) in pairs {
            if track_used[ti] || det_used[di] {
                continue;
            }
            track_used[ti] = true;
            det_used[di] = true;
            self.live[ti].append(t, &points[di]);
        }
        let mut keep = Vec::with_capacity(self.live.len());
        for (ti, mut track) in std::mem::take(&mut self.live).into_iter().enumerate() {
            if !track_used[ti] {
                track.missed += 1;
            }
            if track.missed > self.params.max_missed {
                self.closed.push(track);
            } else {
                keep.push(track);
            }
        }
        self.live = keep;
        for (_, d) in points.iter().enumerate().filter(|(i, _)| !det_used[*i]) {
            self.live.push(Track {
                id: self.next_id,
                class: d.class,
                history: vec![TrackPoint {
                    t,
                    position: d.point,
                    speed: 0.0,
                    yaw: 0.0,
                    yaw_rate: 0.0,
                    cameras: d.cameras.len(),
                }],
                missed: 0,
            });
            self.next_id += 1;
        }
    }
}
