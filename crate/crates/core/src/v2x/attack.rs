//! Ghost-vehicle attack runs with CAM capture for the misbehaviour checks.

use serde::{Deserialize, Serialize};

use super::messages::{CamEmitter, CamMessage, DEFAULT_CAM_RATE_HZ};
use super::misbehavior::PerceptionFrame;
use crate::model::ParticipantId;
use crate::sim::{GhostLabel, GhostSpec, SimError, World};

/// Records what roadside equipment sees: CAMs from every vehicle station
/// and the physical objects in the sensor field.
#[derive(Debug, Clone)]
pub struct V2xObserver {
    emitter: CamEmitter,
    pub cams: Vec<CamMessage>,
    pub perception: Vec<PerceptionFrame>,
}

impl V2xObserver {
    pub fn new(world: &World) -> Self {
        Self {
            emitter: CamEmitter::new(world.anchor(), DEFAULT_CAM_RATE_HZ),
            cams: Vec::new(),
            perception: Vec::new(),
        }
    }

    pub fn observe(&mut self, world: &World) {
        let frame = world.frame();
        for p in frame.iter().filter(|p| p.class.is_vehicle()) {
            if let Some(cam) = self.emitter.emit(p) {
                self.cams.push(cam);
            }
        }
        let objects = frame
            .iter()
            .filter(|p| !world.is_ghost(p.id))
            .map(|p| p.xy())
            .collect();
        self.perception.push(PerceptionFrame {
            t: world.time(),
            objects,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRun {
    pub label: Option<GhostLabel>,
    /// Victim speed per frame from the injection on.
    pub victim_speeds: Vec<(f64, f64)>,
}

impl AttackRun {
    pub fn victim(&self) -> Option<ParticipantId> {
        self.label.as_ref().map(|l| l.victim_id)
    }

    /// Victim speed at the start of the attack.
    pub fn speed_at_start(&self) -> Option<f64> {
        let start = self.label.as_ref()?.start_t;
        self.victim_speeds
            .iter()
            .find(|(t, _)| *t >= start - 1e-9)
            .map(|&(_, v)| v)
    }

    /// First time after the attack start at which the victim is slower
    /// than `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<f64> {
        let start = self.label.as_ref()?.start_t;
        self.victim_speeds
            .iter()
            .find(|(t, v)| *t >= start - 1e-9 && *v < threshold)
            .map(|&(t, _)| t)
    }

    pub fn min_speed_between(&self, from: f64, to: f64) -> Option<f64> {
        self.victim_speeds
            .iter()
            .filter(|(t, _)| *t >= from - 1e-9 && *t <= to + 1e-9)
            .map(|&(_, v)| v)
            .reduce(f64::min)
    }
}

/// Runs `world` to its end, injecting the ghost at `spec.start_t`.
/// `on_frame` sees every frame including the initial one.
pub fn run_attack(
    world: &mut World,
    spec: &GhostSpec,
    mut on_frame: impl FnMut(&World),
) -> Result<AttackRun, SimError> {
    let mut label = None;
    let mut injected = false;
    let mut speeds = Vec::new();
    loop {
        if !injected && world.time() >= spec.start_t - 1e-9 {
            label = world.inject_ghost(spec)?;
            injected = true;
        }
        if let Some(v) = label.as_ref().and_then(|l| world.participant(l.victim_id)) {
            speeds.push((world.time(), v.speed));
        }
        on_frame(world);
        if world.finished() {
            break;
        }
        world.step();
    }
    Ok(AttackRun {
        label,
        victim_speeds: speeds,
    })
}
