//! Built-in agent models: the virtual driver, Euler vehicle dynamics,
//! forward obstacle scanning and spline-following pedestrians.

mod driver;
mod pedestrian;
mod scan;

pub use driver::{
    draw_set_speed, pedal, pedal_acceleration, step_vehicle, stopping_envelope, target_velocity,
    target_velocity_with_norm, DriverParams, ObstacleObservation, VehicleStep, DEFAULT_LERP_NORM_M,
};
pub use pedestrian::{
    step_pedestrian, PedestrianCursor, PedestrianStep, PedestrianTrack, StopPoint,
};
pub use scan::{obstacle_scan, LaneCorridor, ObstacleKind, ScanConfig, ScanHit, StopLine};
