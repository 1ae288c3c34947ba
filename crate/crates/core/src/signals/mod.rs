//! Traffic-signal control (fixed-time, gap-actuated, VRU-optimized) and
//! lost-time analytics.

mod controller;
mod lost_time;
mod program;

pub use controller::{Occupancy, SignalController};
pub use lost_time::{
    aggregate_lost_time, lost_time, write_lost_time_csv, LostTimeRecord, LostTimeStats,
    LostTimeSummary, LOST_TIME_CSV_HEADER,
};
pub use program::{
    apply_progressive_crossing, check_conflicts, conflict_pairs, progressive_crossing_offset,
    signal_state, ControlMode, GreenInterval, GroupId, GroupPlan, Intergreen, ProgressiveCrossing,
    SignalGroup, SignalProgram, SignalState, TIME_EPS,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("unknown signal group `{0}`")]
    UnknownGroup(String),
    #[error("invalid signal program: {0}")]
    InvalidProgram(String),
    #[error("degenerate trajectory: {0}")]
    DegenerateTrajectory(String),
    #[error("no lost-time records")]
    EmptyInput,
}
