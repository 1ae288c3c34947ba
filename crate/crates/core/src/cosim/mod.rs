//! Frame-locked co-simulation: wire protocol, kernel tick, TCP master,
//! scenario recording and playback.

mod barrier;
mod client;
mod kernel;
mod protocol;
mod recording;
mod server;

pub use barrier::{barrier_wait, BarrierOutcome, ClientEvent, ConnId};
pub use client::{Client, ClientError};
pub use kernel::{
    world_frame, HandshakeError, Kernel, KernelCounters, Owner, OwnershipError, OwnershipTable,
};
pub use protocol::{
    decode_message, encode_message, Control, FrameMessage, MalformedMessage, MessageKind,
    MessageReader, PROTOCOL_VERSION,
};
pub use recording::{
    as_played, overdub, playback, RecordingError, RecordingHeader, RecordingWriter,
    ScenarioRecording, RECORDING_FORMAT,
};
pub use server::{serve, ServeOptions, ServeReport};
