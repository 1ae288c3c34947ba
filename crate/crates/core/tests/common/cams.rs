//! Two-message CAM traces for exercising single plausibility rules.

use taf_twin::model::{GeoAnchor, ParticipantClass, ParticipantState};
use taf_twin::v2x::{plausibility_check, CamEmitter, CamMessage, PlausibilityConfig, Rule};

pub fn anchor() -> GeoAnchor {
    GeoAnchor {
        origin_lat: 49.0069,
        origin_lon: 8.4037,
        origin_alt: 115.0,
    }
}

/// Station 9 at arc `x1` with speed `v1`, then `dt` later at `x2` with `v2`,
/// both along heading `yaw`.
pub fn pair(x1: f64, v1: f64, x2: f64, v2: f64, dt: f64, yaw: f64) -> Vec<CamMessage> {
    let mut e = CamEmitter::new(anchor(), 10.0);
    let mut a = ParticipantState::new(
        9,
        ParticipantClass::Car,
        [x1 * yaw.cos(), x1 * yaw.sin(), 0.0],
        yaw,
        v1,
    );
    a.timestamp = 5.0;
    let mut b = ParticipantState::new(
        9,
        ParticipantClass::Car,
        [x2 * yaw.cos(), x2 * yaw.sin(), 0.0],
        yaw,
        v2,
    );
    b.timestamp = 5.0 + dt;
    vec![e.emit(&a).unwrap(), e.emit(&b).unwrap()]
}

pub fn rules(cams: &[CamMessage]) -> Vec<Rule> {
    plausibility_check(cams, &[], &anchor(), &PlausibilityConfig::default())
        .iter()
        .map(|v| v.rule)
        .collect()
}
