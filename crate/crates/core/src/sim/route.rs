//! Routes: lane sequences flattened into one path with signalized stop lines.

use crate::model::{Point3, Polyline, RoadNetwork};

/// A signalized stop on a route, at the end of an incoming lane.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteStop {
    pub arc: f64,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub lanes: Vec<String>,
    pub path: Polyline,
    pub stops: Vec<RouteStop>,
    /// `(lane id, start arc, end arc, width)` for each lane on the path.
    pub spans: Vec<(String, f64, f64, f64)>,
}

impl Route {
    pub fn length(&self) -> f64 {
        self.path.length()
    }

    pub fn first_lane(&self) -> &str {
        &self.lanes[0]
    }

    pub fn width_at(&self, arc: f64) -> f64 {
        self.spans
            .iter()
            .rev()
            .find(|s| arc >= s.1)
            .unwrap_or(&self.spans[0])
            .3
    }

    /// Lane whose span contains `arc`, if any.
    pub fn lane_at(&self, arc: f64) -> Option<&str> {
        self.spans
            .iter()
            .find(|s| arc >= s.1 && arc < s.2)
            .map(|s| s.0.as_str())
    }
}

fn push_point(points: &mut Vec<Point3>, p: Point3) {
    if points.last().is_none_or(|q| q != &p) {
        points.push(p);
    }
}

/// Flattens `lanes` into one path. Consecutive lanes must be joined by a
/// junction connection or listed as successors.
pub fn build_route(network: &RoadNetwork, lanes: &[String]) -> Result<Route, String> {
    if lanes.is_empty() {
        return Err("empty route".into());
    }
    let mut points: Vec<Point3> = Vec::new();
    let mut stops = Vec::new();
    let mut spans = Vec::new();
    for (k, id) in lanes.iter().enumerate() {
        let lane = network
            .lane(id)
            .ok_or_else(|| format!("route references unknown lane {id}"))?;
        let start = Polyline::new(points.clone()).length();
        let start = if points.is_empty() {
            0.0
        } else {
            start + distance(points.last().unwrap(), &lane.centerline[0])
        };
        for p in &lane.centerline {
            push_point(&mut points, *p);
        }
        let end = Polyline::new(points.clone()).length();
        spans.push((id.clone(), start, end, lane.width));
        if let Some(next) = lanes.get(k + 1) {
            match network.connection(id, next) {
                Some((_, conn)) => {
                    if let Some(g) = &conn.signal_group {
                        stops.push(RouteStop {
                            arc: end,
                            group: g.clone(),
                        });
                    }
                    for p in &conn.curve {
                        push_point(&mut points, *p);
                    }
                }
                None if lane.successor_ids.contains(next) => {}
                None => return Err(format!("lanes {id} and {next} are not connected")),
            }
        }
    }
    let path = Polyline::new(points);
    if path.length() <= 0.0 {
        return Err("route has zero length".into());
    }
    Ok(Route {
        lanes: lanes.to_vec(),
        path,
        stops,
        spans,
    })
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
