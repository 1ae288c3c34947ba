//! Spline-following pedestrians with optional dwell points and loops.

use serde::{Deserialize, Serialize};

use crate::model::{normalize_yaw, Point3, Polyline};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopPoint {
    pub waypoint: usize,
    pub dwell_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianTrack {
    pub spline: Polyline,
    pub walk_speed: f64,
    #[serde(default)]
    pub looped: bool,
    #[serde(default)]
    pub stop_points: Vec<StopPoint>,
}

impl PedestrianTrack {
    pub fn new(points: Vec<Point3>, walk_speed: f64) -> Self {
        Self {
            spline: Polyline::new(points),
            walk_speed,
            looped: false,
            stop_points: Vec::new(),
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.spline.len_points() < 2 {
            return Err("pedestrian track needs at least 2 waypoints".into());
        }
        if !(self.walk_speed > 0.0) {
            return Err(format!(
                "walk speed must be positive, got {}",
                self.walk_speed
            ));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.spline.length()
    }
}

/// Progress along a track.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PedestrianCursor {
    pub s: f64,
    pub dwell_left: f64,
    pub lap: u32,
    served: Vec<bool>,
}

impl PedestrianCursor {
    pub fn at(s: f64) -> Self {
        Self {
            s,
            ..Default::default()
        }
    }

    pub fn finished(&self, track: &PedestrianTrack) -> bool {
        !track.looped && self.s >= track.length() && self.dwell_left <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianStep {
    pub position: Point3,
    pub yaw: f64,
    pub cursor: PedestrianCursor,
}

/// Walks `dt` seconds along the track, dwelling at stop points and wrapping
/// looped tracks.
pub fn step_pedestrian(
    track: &PedestrianTrack,
    cursor: &PedestrianCursor,
    dt: f64,
) -> PedestrianStep {
    let length = track.length();
    let mut c = cursor.clone();
    c.served.resize(track.stop_points.len(), false);
    let mut budget = dt;
    let mut guard = 0;
    while budget > 0.0 && guard < 64 {
        guard += 1;
        if c.dwell_left > 0.0 {
            let used = budget.min(c.dwell_left);
            c.dwell_left -= used;
            budget -= used;
            continue;
        }
        let next_stop = track
            .stop_points
            .iter()
            .enumerate()
            .filter(|(i, _)| !c.served[*i])
            .map(|(i, sp)| (i, track.spline.arc_at_index(sp.waypoint), sp.dwell_s))
            .filter(|&(_, arc, _)| arc >= c.s)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let step = track.walk_speed * budget;
        if let Some((i, arc, dwell)) = next_stop {
            if c.s + step >= arc {
                budget -= (arc - c.s) / track.walk_speed;
                c.s = arc;
                c.served[i] = true;
                c.dwell_left = dwell;
                continue;
            }
        }
        c.s += step;
        budget = 0.0;
        if c.s >= length {
            if track.looped && length > 0.0 {
                let overshoot = c.s - length;
                c.s = overshoot % length;
                c.lap += 1;
                c.served.iter_mut().for_each(|s| *s = false);
                // stop points passed during the wrap are handled on the next call
            } else {
                c.s = length;
            }
        }
    }
    let (position, heading) = track.spline.sample(c.s);
    PedestrianStep {
        position,
        yaw: normalize_yaw(heading),
        cursor: c,
    }
}
