//! Wire protocol: one JSON object per line.
//!
//! ```text
//! {"kind":"HELLO","frame_no":0,"sim_time":0.0,"client_id":null,"payload":[],"control":{"version":"taf-twin/1","lockstep":true,"claim":[7]}}
//! {"kind":"WELCOME","frame_no":0,"sim_time":0.0,"client_id":"c1","payload":[],"control":{"version":"taf-twin/1","assigned":[7],"dt":0.05}}
//! {"kind":"FRAME","frame_no":12,"sim_time":0.6,"payload":[{...ParticipantState...}],"signals":{"main":"green"}}
//! {"kind":"UPDATE","frame_no":12,"sim_time":0.6,"client_id":"c1","payload":[{...}]}
//! ```
//!
//! Unknown fields are ignored when decoding.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ParticipantId, ParticipantState};
use crate::signals::SignalState;

pub const PROTOCOL_VERSION: &str = "taf-twin/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MessageKind {
    Hello,
    Welcome,
    Frame,
    Update,
    Ack,
    Control,
    Bye,
}

/// Handshake and control fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Control {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    /// Client takes part in the frame barrier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lockstep: Option<bool>,
    /// Existing participant ids the client wants to drive.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claim: Vec<ParticipantId>,
    /// New participants the client wants the kernel to create for it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spawn: Vec<ParticipantState>,
    /// Ids owned by the client after the handshake.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assigned: Vec<ParticipantId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMessage {
    pub kind: MessageKind,
    pub frame_no: u64,
    pub sim_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_id: Option<String>,
    #[serde(default)]
    pub payload: Vec<ParticipantState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<Control>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<BTreeMap<String, SignalState>>,
}

impl FrameMessage {
    pub fn new(kind: MessageKind, frame_no: u64, sim_time: f64) -> Self {
        Self {
            kind,
            frame_no,
            sim_time,
            client_id: None,
            payload: Vec::new(),
            control: None,
            signals: None,
        }
    }

    pub fn with_client(mut self, client_id: &str) -> Self {
        self.client_id = Some(client_id.to_string());
        self
    }

    pub fn with_payload(mut self, payload: Vec<ParticipantState>) -> Self {
        self.payload = payload;
        self
    }

    pub fn with_control(mut self, control: Control) -> Self {
        self.control = Some(control);
        self
    }

    pub fn hello(lockstep: bool, claim: Vec<ParticipantId>, spawn: Vec<ParticipantState>) -> Self {
        Self::new(MessageKind::Hello, 0, 0.0).with_control(Control {
            version: Some(PROTOCOL_VERSION.into()),
            lockstep: Some(lockstep),
            claim,
            spawn,
            ..Control::default()
        })
    }

    pub fn bye(frame_no: u64, sim_time: f64, reason: &str) -> Self {
        Self::new(MessageKind::Bye, frame_no, sim_time).with_control(Control {
            reason: Some(reason.into()),
            ..Control::default()
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("malformed message at line {line}, column {column}: {message}")]
pub struct MalformedMessage {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Encodes one message as a single JSON line terminated by `\n`.
pub fn encode_message(msg: &FrameMessage) -> Vec<u8> {
    let mut out = serde_json::to_vec(msg).expect("protocol types always serialize");
    out.push(b'\n');
    out
}

fn decode_at(bytes: &[u8], line: usize) -> Result<FrameMessage, MalformedMessage> {
    let trimmed = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let trimmed = trimmed.strip_suffix(b"\r").unwrap_or(trimmed);
    if trimmed.contains(&b'\n') {
        return Err(MalformedMessage {
            line,
            column: 0,
            message: "embedded newline".into(),
        });
    }
    serde_json::from_slice(trimmed).map_err(|e| MalformedMessage {
        line,
        column: e.column(),
        message: e.to_string(),
    })
}

/// Decodes one line. Reported positions are relative to that line.
pub fn decode_message(bytes: &[u8]) -> Result<FrameMessage, MalformedMessage> {
    decode_at(bytes, 1)
}

/// Reads messages line by line, tracking line numbers for diagnostics.
pub struct MessageReader<R> {
    inner: R,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> MessageReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line: 0,
            buf: Vec::new(),
        }
    }

    pub fn line(&self) -> usize {
        self.line
    }

    /// `Ok(None)` at end of stream. A final line without `\n` is truncated
    /// and reported as malformed.
    pub fn next_message(
        &mut self,
    ) -> std::io::Result<Option<Result<FrameMessage, MalformedMessage>>> {
        loop {
            self.buf.clear();
            let n = self.inner.read_until(b'\n', &mut self.buf)?;
            if n == 0 {
                return Ok(None);
            }
            self.line += 1;
            if self.buf.iter().all(|b| b.is_ascii_whitespace()) {
                continue;
            }
            if self.buf.last() != Some(&b'\n') {
                return Ok(Some(Err(MalformedMessage {
                    line: self.line,
                    column: self.buf.len(),
                    message: "truncated line".into(),
                })));
            }
            return Ok(Some(decode_at(&self.buf, self.line)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParticipantClass;

    fn frame() -> FrameMessage {
        let a = ParticipantState::new(1, ParticipantClass::Car, [1.5, -2.25, 0.0], 0.3, 9.7);
        let b = ParticipantState::new(2, ParticipantClass::Pedestrian, [0.1, 0.2, 0.0], -1.0, 1.4);
        let mut m = FrameMessage::new(MessageKind::Frame, 12, 0.6).with_payload(vec![a, b]);
        m.signals = Some(
            [("main".to_string(), SignalState::Green)]
                .into_iter()
                .collect(),
        );
        m
    }

    #[test]
    fn round_trip() {
        let m = frame();
        let bytes = encode_message(&m);
        assert_eq!(*bytes.last().unwrap(), b'\n');
        assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), 1);
        assert_eq!(decode_message(&bytes).unwrap(), m);
    }

    #[test]
    fn frame_payload_is_array_of_two() {
        let v: serde_json::Value = serde_json::from_slice(&encode_message(&frame())).unwrap();
        assert_eq!(v["kind"], "FRAME");
        assert_eq!(v["payload"].as_array().unwrap().len(), 2);
        assert_eq!(v["payload"][0]["class"], "car");
        for key in ["kind", "frame_no", "sim_time", "payload"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn unknown_fields_ignored() {
        let line =
            br#"{"kind":"ACK","frame_no":3,"sim_time":0.15,"client_id":"c1","future":{"x":1}}"#;
        let m = decode_message(line).unwrap();
        assert_eq!(m.kind, MessageKind::Ack);
        assert!(m.payload.is_empty());
    }

    #[test]
    fn truncated_line_is_malformed() {
        let bytes = encode_message(&frame());
        let cut = &bytes[..bytes.len() / 2];
        let err = decode_message(cut).unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.column > 0);

        let mut stream = encode_message(&frame());
        stream.extend_from_slice(cut);
        let mut r = MessageReader::new(&stream[..]);
        assert!(r.next_message().unwrap().unwrap().is_ok());
        let err = r.next_message().unwrap().unwrap().unwrap_err();
        assert_eq!(err.line, 2);
        assert!(r.next_message().unwrap().is_none());
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(decode_message(br#"{"kind":"PING","frame_no":0,"sim_time":0}"#).is_err());
    }
}
