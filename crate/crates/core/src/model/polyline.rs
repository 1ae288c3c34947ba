//! Arc-length parameterized polylines.

use serde::{Deserialize, Serialize};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Point3>", into = "Vec<Point3>")]
pub struct Polyline {
    points: Vec<Point3>,
    cumulative: Vec<f64>,
}

/// Closest-point query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc position of the foot point.
    pub s: f64,
    /// Signed lateral offset, positive to the left of the travel direction.
    pub lateral: f64,
    pub distance: f64,
}

impl From<Vec<Point3>> for Polyline {
    fn from(points: Vec<Point3>) -> Self {
        Self::new(points)
    }
}

impl From<Polyline> for Vec<Point3> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

fn dist2d(a: Point3, b: Point3) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl Polyline {
    pub fn new(points: Vec<Point3>) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += dist3d(points[i - 1], *p);
            }
            cumulative.push(acc);
        }
        Self { points, cumulative }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len_points(&self) -> usize {
        self.points.len()
    }

    pub fn length(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Arc position of the waypoint `index`.
    pub fn arc_at_index(&self, index: usize) -> f64 {
        self.cumulative[index.min(self.cumulative.len().saturating_sub(1))]
    }

    fn segment_at(&self, s: f64) -> usize {
        // index i such that cumulative[i] <= s < cumulative[i+1]
        let n = self.points.len();
        if n < 2 {
            return 0;
        }
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Position and planar heading at arc position `s` (clamped to the line).
    pub fn sample(&self, s: f64) -> (Point3, f64) {
        match self.points.len() {
            0 => ([0.0; 3], 0.0),
            1 => (self.points[0], 0.0),
            _ => {
                let s = s.clamp(0.0, self.length());
                let i = self.segment_at(s);
                let (a, b) = (self.points[i], self.points[i + 1]);
                let seg = self.cumulative[i + 1] - self.cumulative[i];
                let t = if seg > 0.0 {
                    (s - self.cumulative[i]) / seg
                } else {
                    0.0
                };
                let p = [
                    a[0] + (b[0] - a[0]) * t,
                    a[1] + (b[1] - a[1]) * t,
                    a[2] + (b[2] - a[2]) * t,
                ];
                (p, (b[1] - a[1]).atan2(b[0] - a[0]))
            }
        }
    }

    pub fn position_at(&self, s: f64) -> Point3 {
        self.sample(s).0
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.sample(s).1
    }

    /// Closest point on the line in the xy plane.
    pub fn project(&self, p: [f64; 2]) -> Option<Projection> {
        self.project_within(p, 0.0, f64::INFINITY)
    }

    /// Closest point restricted to arc positions in `[s_min, s_max]`.
    pub fn project_within(&self, p: [f64; 2], s_min: f64, s_max: f64) -> Option<Projection> {
        if self.points.len() < 2 {
            return None;
        }
        let mut best: Option<Projection> = None;
        for i in 0..self.points.len() - 1 {
            let (s0, s1) = (self.cumulative[i], self.cumulative[i + 1]);
            if s1 < s_min || s0 > s_max {
                continue;
            }
            let (a, b) = (self.points[i], self.points[i + 1]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            if len2 == 0.0 {
                continue;
            }
            let seg_len = s1 - s0;
            let mut t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2;
            t = t.clamp(0.0, 1.0);
            let mut s = s0 + t * seg_len;
            if s < s_min || s > s_max {
                s = s.clamp(s_min, s_max);
                t = (s - s0) / seg_len;
            }
            let fx = a[0] + dx * t;
            let fy = a[1] + dy * t;
            let (ex, ey) = (p[0] - fx, p[1] - fy);
            let distance = ex.hypot(ey);
            let len = len2.sqrt();
            let lateral = (dx * ey - dy * ex) / len;
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(Projection {
                    s,
                    lateral,
                    distance,
                });
            }
        }
        best
    }
}

fn dist3d(a: Point3, b: Point3) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Planar distance between two points.
pub fn planar_distance(a: Point3, b: Point3) -> f64 {
    dist2d(a, b)
}
