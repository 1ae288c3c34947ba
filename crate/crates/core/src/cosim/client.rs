//! Minimal blocking client, used for loopback tests and as a library for
//! Rust co-simulators.

use std::io::{BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use thiserror::Error;

use super::protocol::{
    encode_message, FrameMessage, MalformedMessage, MessageKind, MessageReader, PROTOCOL_VERSION,
};
use crate::model::{ParticipantId, ParticipantState};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Malformed(#[from] MalformedMessage),
    #[error("version mismatch: server speaks {0:?}")]
    VersionMismatch(Option<String>),
    #[error("handshake rejected: {0}")]
    Rejected(String),
    #[error("connection closed during handshake")]
    Closed,
}

pub struct Client {
    reader: MessageReader<BufReader<TcpStream>>,
    writer: TcpStream,
    client_id: String,
    owned: Vec<ParticipantId>,
    dt: f64,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs, hello: &FrameMessage) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut writer = stream.try_clone()?;
        writer.write_all(&encode_message(hello))?;
        let mut reader = MessageReader::new(BufReader::new(stream));
        loop {
            let msg = reader.next_message()?.ok_or(ClientError::Closed)??;
            match msg.kind {
                MessageKind::Welcome => {
                    let control = msg.control.unwrap_or_default();
                    if control.version.as_deref() != Some(PROTOCOL_VERSION) {
                        return Err(ClientError::VersionMismatch(control.version));
                    }
                    return Ok(Self {
                        reader,
                        writer,
                        client_id: msg.client_id.unwrap_or_default(),
                        owned: control.assigned,
                        dt: control.dt.unwrap_or(0.0),
                    });
                }
                MessageKind::Bye => {
                    let reason = msg.control.and_then(|c| c.reason).unwrap_or_default();
                    return Err(ClientError::Rejected(reason));
                }
                _ => continue,
            }
        }
    }

    pub fn client_id(&self) -> &str {
        &self.client_id
    }

    pub fn owned(&self) -> &[ParticipantId] {
        &self.owned
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Next FRAME, or `None` once the master said BYE or closed.
    pub fn next_frame(&mut self) -> Result<Option<FrameMessage>, ClientError> {
        loop {
            match self.reader.next_message()? {
                None => return Ok(None),
                Some(msg) => {
                    let msg = msg?;
                    match msg.kind {
                        MessageKind::Frame => return Ok(Some(msg)),
                        MessageKind::Bye => return Ok(None),
                        _ => continue,
                    }
                }
            }
        }
    }

    pub fn send_update(
        &mut self,
        frame: &FrameMessage,
        states: Vec<ParticipantState>,
    ) -> Result<(), ClientError> {
        let msg = FrameMessage::new(MessageKind::Update, frame.frame_no, frame.sim_time)
            .with_client(&self.client_id)
            .with_payload(states);
        self.writer.write_all(&encode_message(&msg))?;
        Ok(())
    }

    pub fn send_ack(&mut self, frame: &FrameMessage) -> Result<(), ClientError> {
        let msg = FrameMessage::new(MessageKind::Ack, frame.frame_no, frame.sim_time)
            .with_client(&self.client_id);
        self.writer.write_all(&encode_message(&msg))?;
        Ok(())
    }

    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<(), ClientError> {
        self.writer.write_all(bytes)?;
        Ok(())
    }

    pub fn bye(mut self) -> Result<(), ClientError> {
        self.writer
            .write_all(&encode_message(&FrameMessage::bye(0, 0.0, "client done")))?;
        Ok(())
    }
}
