//! Scenario-driven simulation of lane-bound vehicles, signal-aware
//! pedestrians and the intersection controller.

pub mod demo;
mod route;
mod scenario;
mod world;

pub use route::{build_route, Route, RouteStop};
pub use scenario::{
    BehaviorConfig, DemandEntry, Environment, Scenario, ScenarioConfig, ScenarioError,
};
pub use world::{
    GhostChannel, GhostLabel, GhostSpec, SimError, World, DEFAULT_BICYCLE_SPEED,
    DEFAULT_WALK_SPEED, GHOST_ID_BASE,
};

/// Calls `on_frame` for the initial frame and after every tick until the
/// configured duration is reached.
pub fn run_to_end(world: &mut World, mut on_frame: impl FnMut(&World)) {
    on_frame(world);
    while !world.finished() {
        world.step();
        on_frame(world);
    }
}
