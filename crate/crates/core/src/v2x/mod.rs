//! V2X layer: CAM/SPaT generation, ghost-vehicle attacks, misbehaviour
//! detection and the threat register.

mod attack;
mod messages;
mod misbehavior;
mod threats;

pub use attack::{run_attack, AttackRun, V2xObserver};
pub use messages::{
    emit_spat, CamEmitter, CamMessage, SpatGroup, SpatMessage, DEFAULT_CAM_RATE_HZ,
};
pub use misbehavior::{
    plausibility_check, Evidence, MisbehaviorVerdict, PerceptionFrame, PlausibilityConfig, Rule,
    Severity,
};
pub use threats::{
    default_register, score_threats, top_tier, Damage, RangeError, ThreatEntry, TOP_TIER_MIN_SCORE,
};
