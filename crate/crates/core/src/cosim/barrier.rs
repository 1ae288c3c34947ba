//! Frame barrier with timeout degradation.

use std::collections::BTreeSet;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use super::protocol::{FrameMessage, MalformedMessage, MessageKind};

/// Connection handle used by the master.
pub type ConnId = u64;

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ClientEvent {
    Message {
        conn: ConnId,
        msg: FrameMessage,
    },
    Malformed {
        conn: ConnId,
        error: MalformedMessage,
    },
    Closed {
        conn: ConnId,
    },
}

impl ClientEvent {
    pub fn conn(&self) -> ConnId {
        match self {
            ClientEvent::Message { conn, .. }
            | ClientEvent::Malformed { conn, .. }
            | ClientEvent::Closed { conn } => *conn,
        }
    }

    /// Whether this event releases `conn` from the barrier of `frame_no`.
    fn answers(&self, frame_no: u64) -> bool {
        match self {
            ClientEvent::Message { msg, .. } => match msg.kind {
                MessageKind::Update | MessageKind::Ack => msg.frame_no == frame_no,
                MessageKind::Bye => true,
                _ => false,
            },
            ClientEvent::Malformed { .. } | ClientEvent::Closed { .. } => true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BarrierOutcome {
    pub responded: BTreeSet<ConnId>,
    /// Expected connections that did not answer before the timeout.
    pub lagging: BTreeSet<ConnId>,
    /// Every event received while waiting, in arrival order.
    pub events: Vec<ClientEvent>,
}

/// Blocks until every connection in `expected` answered `frame_no` (UPDATE,
/// ACK, BYE or disconnect) or `timeout` elapsed.
pub fn barrier_wait(
    rx: &Receiver<ClientEvent>,
    expected: &BTreeSet<ConnId>,
    frame_no: u64,
    timeout: Duration,
) -> BarrierOutcome {
    let mut out = BarrierOutcome::default();
    let deadline = Instant::now() + timeout;
    while !expected.is_subset(&out.responded) {
        let now = Instant::now();
        if now >= deadline {
            break;
        }
        match rx.recv_timeout(deadline - now) {
            Ok(ev) => {
                if expected.contains(&ev.conn()) && ev.answers(frame_no) {
                    out.responded.insert(ev.conn());
                }
                out.events.push(ev);
            }
            Err(RecvTimeoutError::Timeout) => break,
            Err(RecvTimeoutError::Disconnected) => break,
        }
    }
    out.lagging = expected.difference(&out.responded).copied().collect();
    out
}
