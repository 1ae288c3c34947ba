//! Multi-camera fusion of projected detections.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::ParticipantClass;

pub const DEFAULT_MERGE_RADIUS_M: f64 = 1.5;

/// A detection projected into the local frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldDetection {
    pub camera_id: String,
    pub class: ParticipantClass,
    pub point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedPoint {
    pub class: ParticipantClass,
    pub point: [f64; 2],
    /// Cameras contributing to the point, sorted.
    pub cameras: Vec<String>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn mean(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len() as f64;
    [
        points.iter().map(|p| p[0]).sum::<f64>() / n,
        points.iter().map(|p| p[1]).sum::<f64>() / n,
    ]
}

/// Groups same-class detections by single linkage within `radius` and
/// replaces each group by one point: detections of the same camera are
/// averaged, then the camera means are averaged. The result does not depend
/// on input order.
pub fn merge_detections(detections: &[WorldDetection], radius: f64) -> Vec<FusedPoint> {
    assert!(radius > 0.0, "merge radius must be positive");
    let mut sorted: Vec<&WorldDetection> = detections.iter().collect();
    sorted.sort_by(|a, b| {
        a.class
            .cmp(&b.class)
            .then(a.point[0].total_cmp(&b.point[0]))
            .then(a.point[1].total_cmp(&b.point[1]))
            .then(a.camera_id.cmp(&b.camera_id))
    });
    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if sorted[i].class != sorted[j].class {
                break;
            }
            let (a, b) = (sorted[i].point, sorted[j].point);
            if (a[0] - b[0]).hypot(a[1] - b[1]) <= radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeMap<&str, Vec<[f64; 2]>>> = BTreeMap::new();
    for (i, d) in sorted.iter().enumerate() {
        let root = find(&mut parent, i);
        groups
            .entry(root)
            .or_default()
            .entry(d.camera_id.as_str())
            .or_default()
            .push(d.point);
    }
    groups
        .into_iter()
        .map(|(root, cams)| {
            let means: Vec<[f64; 2]> = cams.values().map(|pts| mean(pts)).collect();
            FusedPoint {
                class: sorted[root].class,
                point: mean(&means),
                cameras: cams.keys().map(|c| c.to_string()).collect(),
            }
        })
        .collect()
}
