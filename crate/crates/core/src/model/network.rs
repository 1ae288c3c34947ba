//! Road network: lanes, junction connections and signal groups.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geo::GeoAnchor;
use super::polyline::{Point3, Polyline};
use crate::signals::{check_conflicts, SignalGroup, SignalProgram};

pub type LaneId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneKind {
    Road,
    Tram,
    Pedestrian,
    Bicycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneGeometry {
    pub id: LaneId,
    pub centerline: Vec<Point3>,
    pub width: f64,
    #[serde(default)]
    pub successor_ids: Vec<LaneId>,
    pub lane_kind: LaneKind,
}

impl LaneGeometry {
    pub fn polyline(&self) -> Polyline {
        Polyline::new(self.centerline.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneConnection {
    pub from: LaneId,
    pub to: LaneId,
    /// Connecting curve through the junction; empty for a direct join.
    #[serde(default)]
    pub curve: Vec<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub id: String,
    pub connections: Vec<LaneConnection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub anchor: GeoAnchor,
    pub lanes: Vec<LaneGeometry>,
    #[serde(default)]
    pub junctions: Vec<Junction>,
    #[serde(default)]
    pub signal_groups: Vec<SignalGroup>,
    #[serde(default)]
    pub signal_programs: Vec<SignalProgram>,
}

#[derive(Debug, thiserror::Error)]
pub enum NetworkIoError {
    #[error("reading network file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing network file: {0}")]
    Parse(#[from] serde_json::Error),
}

impl RoadNetwork {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkIoError> {
        Ok(Self::from_json(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn lane(&self, id: &str) -> Option<&LaneGeometry> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn connection(&self, from: &str, to: &str) -> Option<(&Junction, &LaneConnection)> {
        self.junctions
            .iter()
            .flat_map(|j| j.connections.iter().map(move |c| (j, c)))
            .find(|(_, c)| c.from == from && c.to == to)
    }

    pub fn program(&self, id: &str) -> Option<&SignalProgram> {
        self.signal_programs.iter().find(|p| p.id == id)
    }

    /// Connections controlled by a signal group.
    pub fn controlled_connections(&self, group: &str) -> Vec<&LaneConnection> {
        self.junctions
            .iter()
            .flat_map(|j| j.connections.iter())
            .filter(|c| c.signal_group.as_deref() == Some(group))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    DuplicateLaneId { lane: LaneId },
    DanglingSuccessor { lane: LaneId, successor: LaneId },
    DegenerateLane { lane: LaneId, reason: String },
    JunctionMissingLane { junction: String, lane: LaneId },
    UnknownSignalGroup { junction: String, group: String },
    SignalGroup { message: String },
    SignalProgram { message: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateLaneId { lane } => write!(f, "duplicate lane id {lane}"),
            Finding::DanglingSuccessor { lane, successor } => {
                write!(f, "lane {lane} references missing successor {successor}")
            }
            Finding::DegenerateLane { lane, reason } => write!(f, "lane {lane}: {reason}"),
            Finding::JunctionMissingLane { junction, lane } => {
                write!(f, "junction {junction} connects missing lane {lane}")
            }
            Finding::UnknownSignalGroup { junction, group } => {
                write!(
                    f,
                    "junction {junction} references unknown signal group {group}"
                )
            }
            Finding::SignalGroup { message } | Finding::SignalProgram { message } => {
                f.write_str(message)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Structural checks on a network. Never mutates the input.
pub fn validate_network(network: &RoadNetwork) -> ValidationReport {
    let mut findings = Vec::new();
    let mut ids = BTreeSet::new();
    for lane in &network.lanes {
        if !ids.insert(lane.id.as_str()) {
            findings.push(Finding::DuplicateLaneId {
                lane: lane.id.clone(),
            });
        }
    }
    for lane in &network.lanes {
        if lane.centerline.len() < 2 {
            findings.push(Finding::DegenerateLane {
                lane: lane.id.clone(),
                reason: format!(
                    "centerline has {} point(s), need at least 2",
                    lane.centerline.len()
                ),
            });
        } else if lane.centerline.windows(2).any(|w| w[0] == w[1]) {
            findings.push(Finding::DegenerateLane {
                lane: lane.id.clone(),
                reason: "consecutive centerline points coincide".into(),
            });
        }
        if !(lane.width > 0.0) {
            findings.push(Finding::DegenerateLane {
                lane: lane.id.clone(),
                reason: format!("width {} <= 0", lane.width),
            });
        }
        for succ in &lane.successor_ids {
            if !ids.contains(succ.as_str()) {
                findings.push(Finding::DanglingSuccessor {
                    lane: lane.id.clone(),
                    successor: succ.clone(),
                });
            }
        }
    }
    let groups: BTreeSet<&str> = network
        .signal_groups
        .iter()
        .map(|g| g.id.as_str())
        .collect();
    for junction in &network.junctions {
        for c in &junction.connections {
            for lane in [&c.from, &c.to] {
                if !ids.contains(lane.as_str()) {
                    findings.push(Finding::JunctionMissingLane {
                        junction: junction.id.clone(),
                        lane: lane.clone(),
                    });
                }
            }
            if let Some(g) = &c.signal_group {
                if !groups.contains(g.as_str()) {
                    findings.push(Finding::UnknownSignalGroup {
                        junction: junction.id.clone(),
                        group: g.clone(),
                    });
                }
            }
        }
    }
    findings.extend(
        check_conflicts(&network.signal_groups)
            .into_iter()
            .map(|message| Finding::SignalGroup { message }),
    );
    for program in &network.signal_programs {
        findings.extend(
            program
                .check(&network.signal_groups)
                .into_iter()
                .map(|message| Finding::SignalProgram { message }),
        );
    }
    ValidationReport { findings }
}

/// Index of lanes by id, for callers that look lanes up repeatedly.
pub fn lane_index(network: &RoadNetwork) -> BTreeMap<&str, &LaneGeometry> {
    network.lanes.iter().map(|l| (l.id.as_str(), l)).collect()
}
