use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub type ParticipantId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantClass {
    Car,
    Truck,
    Bus,
    Tram,
    Bicycle,
    Pedestrian,
    Unknown,
}

impl ParticipantClass {
    pub const ALL: [ParticipantClass; 7] = [
        ParticipantClass::Car,
        ParticipantClass::Truck,
        ParticipantClass::Bus,
        ParticipantClass::Tram,
        ParticipantClass::Bicycle,
        ParticipantClass::Pedestrian,
        ParticipantClass::Unknown,
    ];

    /// Pedestrians and cyclists.
    pub fn is_vru(self) -> bool {
        matches!(
            self,
            ParticipantClass::Pedestrian | ParticipantClass::Bicycle
        )
    }

    pub fn is_vehicle(self) -> bool {
        matches!(
            self,
            ParticipantClass::Car
                | ParticipantClass::Truck
                | ParticipantClass::Bus
                | ParticipantClass::Tram
        )
    }

    pub fn default_dimensions(self) -> Dimensions {
        let (length, width, height) = match self {
            ParticipantClass::Car => (4.5, 1.8, 1.5),
            ParticipantClass::Truck => (10.0, 2.5, 3.5),
            ParticipantClass::Bus => (12.0, 2.55, 3.2),
            ParticipantClass::Tram => (30.0, 2.65, 3.6),
            ParticipantClass::Bicycle => (1.8, 0.6, 1.7),
            ParticipantClass::Pedestrian => (0.5, 0.5, 1.75),
            ParticipantClass::Unknown => (1.0, 1.0, 1.0),
        };
        Dimensions {
            length,
            width,
            height,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ParticipantClass::Car => "car",
            ParticipantClass::Truck => "truck",
            ParticipantClass::Bus => "bus",
            ParticipantClass::Tram => "tram",
            ParticipantClass::Bicycle => "bicycle",
            ParticipantClass::Pedestrian => "pedestrian",
            ParticipantClass::Unknown => "unknown",
        }
    }
}

impl fmt::Display for ParticipantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParticipantClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown participant class `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Simulated,
    Recorded,
    ExternalClient,
    V2x,
    Perception,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Simulated => "simulated",
            Source::Recorded => "recorded",
            Source::ExternalClient => "external_client",
            Source::V2x => "v2x",
            Source::Perception => "perception",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

/// One traffic participant at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantState {
    pub id: ParticipantId,
    pub timestamp: f64,
    pub class: ParticipantClass,
    /// Local ENU meters.
    pub position: [f64; 3],
    /// Heading in radians, counter-clockwise from +x, normalized to (-pi, pi].
    pub yaw: f64,
    pub yaw_rate: f64,
    pub speed: f64,
    pub dimensions: Dimensions,
    pub source: Source,
}

impl ParticipantState {
    pub fn new(
        id: ParticipantId,
        class: ParticipantClass,
        position: [f64; 3],
        yaw: f64,
        speed: f64,
    ) -> Self {
        Self {
            id,
            timestamp: 0.0,
            class,
            position,
            yaw: normalize_yaw(yaw),
            yaw_rate: 0.0,
            speed,
            dimensions: class.default_dimensions(),
            source: Source::Simulated,
        }
    }

    /// Checks the value invariants of a single state.
    pub fn check(&self) -> Result<(), String> {
        let finite = self.position.iter().all(|v| v.is_finite())
            && self.timestamp.is_finite()
            && self.yaw.is_finite()
            && self.yaw_rate.is_finite()
            && self.speed.is_finite();
        if !finite {
            return Err(format!("participant {}: non-finite field", self.id));
        }
        if self.speed < 0.0 {
            return Err(format!(
                "participant {}: negative speed {}",
                self.id, self.speed
            ));
        }
        let d = self.dimensions;
        if !(d.length > 0.0 && d.width > 0.0 && d.height > 0.0) {
            return Err(format!(
                "participant {}: dimensions must be positive",
                self.id
            ));
        }
        if !(self.yaw > -PI && self.yaw <= PI) {
            return Err(format!(
                "participant {}: yaw {} not normalized",
                self.id, self.yaw
            ));
        }
        Ok(())
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.position[0], self.position[1]]
    }

    pub fn heading(&self) -> [f64; 2] {
        [self.yaw.cos(), self.yaw.sin()]
    }
}

/// Wraps an angle into (-pi, pi]. Values already in range are returned
/// bit-identical.
pub fn normalize_yaw(yaw: f64) -> f64 {
    if yaw > -PI && yaw <= PI {
        return yaw;
    }
    let two_pi = 2.0 * PI;
    let mut y = yaw.rem_euclid(two_pi);
    if y > PI {
        y -= two_pi;
    }
    if y <= -PI {
        y += two_pi;
    }
    y
}

/// Checks that ids are unique within one frame.
pub fn check_frame_ids(states: &[ParticipantState]) -> Result<(), ParticipantId> {
    let mut seen = std::collections::BTreeSet::new();
    for s in states {
        if !seen.insert(s.id) {
            return Err(s.id);
        }
    }
    Ok(())
}
