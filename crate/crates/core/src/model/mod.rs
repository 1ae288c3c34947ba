//! World model shared by every subsystem: participant state, road network,
//! polylines and geodetic conversions.

mod geo;
mod network;
mod participant;
mod polyline;

pub use geo::{
    mercator_to_wgs84, wgs84_to_mercator, GeoAnchor, GeoError, GeoPoint, EARTH_RADIUS_M,
    MERCATOR_MAX_LAT,
};
pub use network::{
    lane_index, validate_network, Finding, Junction, LaneConnection, LaneGeometry, LaneId,
    LaneKind, NetworkIoError, RoadNetwork, ValidationReport,
};
pub use participant::{
    check_frame_ids, normalize_yaw, Dimensions, ParticipantClass, ParticipantId, ParticipantState,
    Source,
};
pub use polyline::{planar_distance, Point3, Polyline, Projection};
