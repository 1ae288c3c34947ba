//! Street cross-sections built from individually parameterized parts.

use serde::{Deserialize, Serialize};

use super::ProcgenError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    Road,
    Vegetation,
    Pedestrian,
    Marking,
}

/// One part of a street cross-section. Road parts may be sized by lane count
/// and lane width instead of an explicit width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPart {
    pub kind: PartKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default)]
    pub height_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane_width: Option<f64>,
}

impl SegmentPart {
    pub fn fixed(kind: PartKind, width: f64) -> Self {
        Self {
            kind,
            width: Some(width),
            height_offset: 0.0,
            lane_count: None,
            lane_width: None,
        }
    }

    pub fn road(lane_count: u32, lane_width: f64) -> Self {
        Self {
            kind: PartKind::Road,
            width: None,
            height_offset: 0.0,
            lane_count: Some(lane_count),
            lane_width: Some(lane_width),
        }
    }

    pub fn with_height(mut self, height_offset: f64) -> Self {
        self.height_offset = height_offset;
        self
    }

    /// Effective width `w_i`.
    pub fn effective_width(&self, index: usize) -> Result<f64, ProcgenError> {
        let invalid = |reason: String| ProcgenError::InvalidPart { index, reason };
        let lanes = match (self.lane_count, self.lane_width) {
            (Some(n), Some(w)) => {
                if self.kind != PartKind::Road {
                    return Err(invalid("lane fields are only valid on road parts".into()));
                }
                Some(n as f64 * w)
            }
            (None, None) => None,
            _ => {
                return Err(invalid(
                    "lane_count and lane_width must be given together".into(),
                ))
            }
        };
        let width = match (self.width, lanes) {
            (Some(w), Some(l)) if (w - l).abs() > 1e-9 => {
                return Err(invalid(format!(
                    "width {w} differs from lane_count * lane_width = {l}"
                )))
            }
            (Some(w), _) => w,
            (None, Some(l)) => l,
            (None, None) => return Err(invalid("part has no width".into())),
        };
        if !(width > 0.0) || !width.is_finite() {
            return Err(invalid(format!("width must be positive, got {width}")));
        }
        Ok(width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartInterval {
    pub kind: PartKind,
    /// Offset of the part's left edge from the section's left edge (m).
    pub start: f64,
    pub end: f64,
    pub height_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane_count: Option<u32>,
}

impl PartInterval {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub parts: Vec<PartInterval>,
    pub total_width: f64,
}

/// Lays parts out left to right as `[start, end)` intervals.
pub fn build_cross_section(parts: &[SegmentPart]) -> Result<CrossSection, ProcgenError> {
    if parts.is_empty() {
        return Err(ProcgenError::InvalidPart {
            index: 0,
            reason: "cross-section needs at least one part".into(),
        });
    }
    let mut cursor = 0.0;
    let mut out = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let w = part.effective_width(i)?;
        out.push(PartInterval {
            kind: part.kind,
            start: cursor,
            end: cursor + w,
            height_offset: part.height_offset,
            lane_count: part.lane_count,
        });
        cursor += w;
    }
    Ok(CrossSection {
        parts: out,
        total_width: cursor,
    })
}
