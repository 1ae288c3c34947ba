//! Camera detections to geo-referenced, tracked object lists.
//!
//! Pixel points are projected with per-location homographies into Mercator
//! meters, moved into the local ENU frame, fused across cameras and tracked.

mod calibration;
mod export;
mod fusion;
mod homography;
mod tracking;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calibration::{project_point, CalibrationPair, CalibrationSet, NEAREST_PAIRS};
pub use export::{export_object_list, CORE_COLUMNS, EXTENSION_COLUMNS};
pub use fusion::{merge_detections, FusedPoint, WorldDetection, DEFAULT_MERGE_RADIUS_M};
pub use homography::Homography;
pub use tracking::{Track, TrackPoint, Tracker, TrackerParams};

use crate::model::{GeoAnchor, ParticipantClass};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("camera {camera}: {count} calibration pairs, at least 4 required")]
    TooFewPairs { camera: String, count: usize },
    #[error("camera {camera}: duplicate calibration pixel ({u}, {v})")]
    DuplicatePixel { camera: String, u: f64, v: f64 },
    #[error("camera {camera}: degenerate calibration configuration")]
    Degenerate { camera: String },
    #[error("no calibration for camera {0}")]
    UnknownCamera(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

/// One detection: the base center of an object mask in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub camera_id: String,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub class: ParticipantClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestParams {
    pub merge_radius_m: f64,
    #[serde(flatten)]
    pub tracker: TrackerParams,
}

impl Default for IngestParams {
    fn default() -> Self {
        Self {
            merge_radius_m: DEFAULT_MERGE_RADIUS_M,
            tracker: TrackerParams::default(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a calibration file holding one camera object or an array of them.
pub fn load_calibrations(path: impl AsRef<Path>) -> Result<Vec<CalibrationSet>, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(CalibrationSet),
        Many(Vec<CalibrationSet>),
    }
    let sets = match serde_json::from_str::<OneOrMany>(&text) {
        Ok(OneOrMany::One(s)) => vec![s],
        Ok(OneOrMany::Many(v)) => v,
        Err(e) => {
            return Err(IngestError::Parse {
                path: path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })
        }
    };
    for s in &sets {
        s.check()?;
    }
    Ok(sets)
}

/// Reads a JSON-lines detection file.
pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Detection>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: Detection = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !(d.t.is_finite() && d.u.is_finite() && d.v.is_finite()) {
            return Err(IngestError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: "non-finite value".into(),
            });
        }
        out.push(d);
    }
    Ok(out)
}

/// Projects, fuses and tracks detections. Detections sharing a timestamp
/// form one frame; frames are processed in time order.
pub fn ingest(
    calibrations: &[CalibrationSet],
    detections: &[Detection],
    anchor: &GeoAnchor,
    params: &IngestParams,
) -> Result<Vec<Track>, IngestError> {
    if !(params.merge_radius_m > 0.0) || !(params.tracker.gate_m > 0.0) {
        return Err(IngestError::Invalid(
            "merge radius and gate must be positive".into(),
        ));
    }
    let calib: BTreeMap<&str, &CalibrationSet> = calibrations
        .iter()
        .map(|c| (c.camera_id.as_str(), c))
        .collect();
    let mut projected = Vec::with_capacity(detections.len());
    for d in detections {
        let c = calib
            .get(d.camera_id.as_str())
            .ok_or_else(|| IngestError::UnknownCamera(d.camera_id.clone()))?;
        let [mx, my] = project_point(c, [d.u, d.v])?;
        let point = anchor.mercator_to_enu(mx, my);
        projected.push((
            d.t,
            WorldDetection {
                camera_id: d.camera_id.clone(),
                class: d.class,
                point,
            },
        ));
    }
    projected.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tracker = Tracker::new(params.tracker);
    for frame in projected.chunk_by(|a, b| a.0 == b.0) {
        let dets: Vec<WorldDetection> = frame.iter().map(|(_, d)| d.clone()).collect();
        tracker.step(frame[0].0, &merge_detections(&dets, params.merge_radius_m));
    }
    Ok(tracker.into_tracks())
}
