//! Procedural street cross-sections and grammar-constrained asset placement.

pub mod cross_section;
pub mod pattern;
pub mod sampler;
pub mod scene;

use thiserror::Error;

pub use cross_section::{build_cross_section, CrossSection, PartInterval, PartKind, SegmentPart};
pub use pattern::{parse_pattern, AssetPattern};
pub use sampler::{
    sample_assets, sample_random, sample_round_robin, sample_with, AssetMember, AssetSet,
    AssetSets, Placement, SamplingStrategy,
};
pub use scene::{export_scene, AssetRun, Scene, SceneAsset, SceneCrossSection, StreetSegment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcgenError {
    #[error("invalid part {index}: {reason}")]
    InvalidPart { index: usize, reason: String },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown asset set {0}")]
    UnknownSet(String),
    #[error("invalid asset set: {0}")]
    InvalidSet(String),
    #[error("budget must be >= 0, got {0}")]
    InvalidBudget(f64),
    #[error("mandatory element {element} does not fit in the remaining {remaining} m")]
    BudgetExhausted { element: String, remaining: f64 },
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
}
