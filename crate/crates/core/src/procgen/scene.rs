//! Scene description export: lanes, street cross-sections and placed assets.

use serde::{Deserialize, Serialize};

use super::cross_section::{build_cross_section, CrossSection, SegmentPart};
use super::sampler::Placement;
use super::ProcgenError;
use crate::model::{GeoAnchor, LaneGeometry, Polyline, RoadNetwork};

/// A street segment laid along a reference polyline that traces the
/// section's left edge. Lateral offsets grow to the right of travel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreetSegment {
    pub id: String,
    pub reference: Polyline,
    pub parts: Vec<SegmentPart>,
}

/// Placements sampled for one part of a segment, starting `along_start`
/// meters down the reference line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRun {
    pub segment: String,
    pub part: usize,
    #[serde(default)]
    pub along_start: f64,
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCrossSection {
    pub segment: String,
    #[serde(flatten)]
    pub section: CrossSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneAsset {
    pub asset_id: String,
    pub set: String,
    pub segment: String,
    pub part: usize,
    /// Arc position of the asset center along the reference line.
    pub along: f64,
    /// Lateral offset of the asset center from the left edge.
    pub lateral: f64,
    pub width: f64,
    pub position: [f64; 3],
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub anchor: GeoAnchor,
    pub lanes: Vec<LaneGeometry>,
    pub cross_sections: Vec<SceneCrossSection>,
    pub assets: Vec<SceneAsset>,
}

impl Scene {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scene serializes");
        s.push('\n');
        s
    }
}

pub fn export_scene(
    network: &RoadNetwork,
    segments: &[StreetSegment],
    runs: &[AssetRun],
) -> Result<Scene, ProcgenError> {
    let mut cross_sections = Vec::with_capacity(segments.len());
    for seg in segments {
        if seg.reference.len_points() < 2 || seg.reference.length() <= 0.0 {
            return Err(ProcgenError::InvalidSegment(format!(
                "segment {} has a degenerate reference line",
                seg.id
            )));
        }
        cross_sections.push(SceneCrossSection {
            segment: seg.id.clone(),
            section: build_cross_section(&seg.parts)?,
        });
    }

    let mut assets = Vec::new();
    for run in runs {
        let idx = segments
            .iter()
            .position(|s| s.id == run.segment)
            .ok_or_else(|| {
                ProcgenError::InvalidSegment(format!("unknown segment {}", run.segment))
            })?;
        let reference = &segments[idx].reference;
        let interval = cross_sections[idx]
            .section
            .parts
            .get(run.part)
            .ok_or_else(|| {
                ProcgenError::InvalidSegment(format!(
                    "segment {} has no part {}",
                    run.segment, run.part
                ))
            })?;
        for p in &run.placements {
            let along = run.along_start + p.start + 0.5 * p.width;
            let (base, heading) = reference.sample(along);
            let lateral = interval.center();
            let (sin, cos) = heading.sin_cos();
            assets.push(SceneAsset {
                asset_id: p.asset_id.clone(),
                set: p.set.clone(),
                segment: run.segment.clone(),
                part: run.part,
                along,
                lateral,
                width: p.width,
                position: [
                    base[0] + lateral * sin,
                    base[1] - lateral * cos,
                    base[2] + interval.height_offset,
                ],
                yaw: heading,
            });
        }
    }

    Ok(Scene {
        anchor: network.anchor,
        lanes: network.lanes.clone(),
        cross_sections,
        assets,
    })
}
