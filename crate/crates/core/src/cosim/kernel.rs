//! Frame-locked master state: the world, participant ownership and the
//! merge of client updates into the next frame.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::protocol::{Control, FrameMessage, MessageKind, PROTOCOL_VERSION};
use crate::model::{normalize_yaw, ParticipantId, ParticipantState};
use crate::sim::World;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Owner<'a> {
    Kernel,
    Client(&'a str),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OwnershipError {
    #[error("participant {id} is already owned by {owner}")]
    AlreadyOwned { id: ParticipantId, owner: String },
    #[error("participant {0} does not exist")]
    UnknownParticipant(ParticipantId),
}

/// Participant id to owning client. Ids not listed belong to the kernel.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnershipTable {
    owners: BTreeMap<ParticipantId, String>,
}

impl OwnershipTable {
    pub fn owner(&self, id: ParticipantId) -> Owner<'_> {
        self.owners
            .get(&id)
            .map_or(Owner::Kernel, |c| Owner::Client(c))
    }

    pub fn claim(&mut self, id: ParticipantId, client: &str) -> Result<(), OwnershipError> {
        match self.owners.get(&id) {
            Some(owner) if owner != client => Err(OwnershipError::AlreadyOwned {
                id,
                owner: owner.clone(),
            }),
            _ => {
                self.owners.insert(id, client.to_string());
                Ok(())
            }
        }
    }

    pub fn owned_by(&self, client: &str) -> Vec<ParticipantId> {
        self.owners
            .iter()
            .filter(|(_, c)| c.as_str() == client)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Hands every id of `client` back to the kernel.
    pub fn release(&mut self, client: &str) {
        self.owners.retain(|_, c| c != client);
    }

    pub fn retain_ids(&mut self, alive: &BTreeSet<ParticipantId>) {
        self.owners.retain(|id, _| alive.contains(id));
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCounters {
    pub stale_updates: u64,
    pub ownership_violations: u64,
    pub invalid_states: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HandshakeError {
    #[error("version mismatch: client speaks {client:?}, kernel speaks {PROTOCOL_VERSION}")]
    VersionMismatch { client: Option<String> },
    #[error("expected HELLO, got {0:?}")]
    NotHello(MessageKind),
    #[error(transparent)]
    Ownership(#[from] OwnershipError),
    #[error("invalid spawn request: {0}")]
    InvalidSpawn(String),
}

/// The complete state of `world` as a FRAME message.
pub fn world_frame(world: &World) -> FrameMessage {
    let mut m = FrameMessage::new(MessageKind::Frame, world.frame_no(), world.time())
        .with_payload(world.frame());
    m.signals = Some(world.signal_states());
    m
}

pub struct Kernel {
    world: World,
    owners: OwnershipTable,
    counters: KernelCounters,
    next_client: u64,
}

impl Kernel {
    pub fn new(world: World) -> Self {
        Self {
            world,
            owners: OwnershipTable::default(),
            counters: KernelCounters::default(),
            next_client: 1,
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn owners(&self) -> &OwnershipTable {
        &self.owners
    }

    pub fn counters(&self) -> KernelCounters {
        self.counters
    }

    pub fn frame_no(&self) -> u64 {
        self.world.frame_no()
    }

    /// The complete current frame as a FRAME message.
    pub fn frame_message(&self) -> FrameMessage {
        world_frame(&self.world)
    }

    /// Registers a client: checks the version, claims the listed ids and
    /// creates requested participants. Returns the WELCOME reply.
    pub fn handshake(&mut self, hello: &FrameMessage) -> Result<FrameMessage, HandshakeError> {
        if hello.kind != MessageKind::Hello {
            return Err(HandshakeError::NotHello(hello.kind));
        }
        let control = hello.control.clone().unwrap_or_default();
        if control.version.as_deref() != Some(PROTOCOL_VERSION) {
            return Err(HandshakeError::VersionMismatch {
                client: control.version,
            });
        }
        let client = format!("c{}", self.next_client);
        for &id in &control.claim {
            if self.world.participant(id).is_none() {
                return Err(OwnershipError::UnknownParticipant(id).into());
            }
            if let Owner::Client(owner) = self.owners.owner(id) {
                return Err(OwnershipError::AlreadyOwned {
                    id,
                    owner: owner.to_string(),
                }
                .into());
            }
        }
        for state in &control.spawn {
            let mut s = state.clone();
            s.yaw = normalize_yaw(s.yaw);
            s.check().map_err(HandshakeError::InvalidSpawn)?;
        }
        self.next_client += 1;
        for &id in &control.claim {
            self.owners.claim(id, &client)?;
        }
        for state in control.spawn {
            let id = self.world.spawn_external(state);
            self.owners.claim(id, &client)?;
        }
        Ok(FrameMessage::new(
            MessageKind::Welcome,
            self.world.frame_no(),
            self.world.time(),
        )
        .with_client(&client)
        .with_control(Control {
            version: Some(PROTOCOL_VERSION.into()),
            assigned: self.owners.owned_by(&client),
            dt: Some(self.world.dt()),
            ..Control::default()
        }))
    }

    /// Drops a client. Its participants fall back to kernel models.
    pub fn disconnect(&mut self, client: &str) {
        self.owners.release(client);
    }

    /// Merges client updates for the current frame and advances one tick.
    /// Updates for another frame are dropped as stale; writes to ids the
    /// client does not own are rejected. Returns the next FRAME.
    pub fn tick(&mut self, updates: &[FrameMessage]) -> FrameMessage {
        let current = self.world.frame_no();
        let mut overrides: BTreeMap<ParticipantId, ParticipantState> = BTreeMap::new();
        for u in updates.iter().filter(|u| u.kind == MessageKind::Update) {
            if u.frame_no != current {
                self.counters.stale_updates += 1;
                continue;
            }
            let client = u.client_id.as_deref().unwrap_or("");
            for state in &u.payload {
                match self.owners.owner(state.id) {
                    Owner::Client(owner) if owner == client => {
                        let mut state = state.clone();
                        state.yaw = normalize_yaw(state.yaw);
                        if state.check().is_ok() {
                            overrides.entry(state.id).or_insert(state);
                        } else {
                            self.counters.invalid_states += 1;
                        }
                    }
                    _ => self.counters.ownership_violations += 1,
                }
            }
        }
        self.world.step_with(&overrides);
        let alive: BTreeSet<ParticipantId> = self.world.frame().iter().map(|p| p.id).collect();
        self.owners.retain_ids(&alive);
        self.frame_message()
    }
}
