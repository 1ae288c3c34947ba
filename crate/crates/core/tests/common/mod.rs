#![allow(dead_code)]

pub mod approach;
pub mod cams;
pub mod grammar;
pub mod model_check;

use rand::seq::SliceRandom;
use rand::Rng;
use taf_twin::cosim::{Control, FrameMessage, MessageKind, PROTOCOL_VERSION};
use taf_twin::model::{Dimensions, ParticipantClass, ParticipantState, Source};
use taf_twin::signals::SignalState;

const KINDS: [MessageKind; 7] = [
    MessageKind::Hello,
    MessageKind::Welcome,
    MessageKind::Frame,
    MessageKind::Update,
    MessageKind::Ack,
    MessageKind::Control,
    MessageKind::Bye,
];

const CLASSES: [ParticipantClass; 7] = [
    ParticipantClass::Car,
    ParticipantClass::Truck,
    ParticipantClass::Bus,
    ParticipantClass::Tram,
    ParticipantClass::Bicycle,
    ParticipantClass::Pedestrian,
    ParticipantClass::Unknown,
];

const SOURCES: [Source; 5] = [
    Source::Simulated,
    Source::Recorded,
    Source::ExternalClient,
    Source::V2x,
    Source::Perception,
];

fn value(rng: &mut impl Rng, scale: f64) -> f64 {
    match rng.gen_range(0..6) {
        0 => 0.0,
        1 => rng.gen_range(-4..=4) as f64 * 0.25,
        2 => -0.0,
        _ => rng.gen_range(-scale..scale),
    }
}

#[allow(clippy::approx_constant)]
pub fn random_state(rng: &mut impl Rng) -> ParticipantState {
    let class = *CLASSES.choose(rng).unwrap();
    let mut s = ParticipantState::new(
        rng.gen_range(0..1u64 << 42),
        class,
        [value(rng, 5e3), value(rng, 5e3), value(rng, 50.0)],
        rng.gen_range(-3.14..3.14),
        value(rng, 40.0).abs(),
    );
    s.timestamp = rng.gen_range(0.0..1e4);
    s.yaw_rate = value(rng, 2.0);
    s.source = *SOURCES.choose(rng).unwrap();
    if rng.gen_bool(0.3) {
        s.dimensions = Dimensions {
            length: rng.gen_range(0.1..20.0),
            width: rng.gen_range(0.1..4.0),
            height: rng.gen_range(0.1..5.0),
        };
    }
    s
}

fn random_text(rng: &mut impl Rng) -> String {
    const PARTS: [&str; 8] = [
        "c1",
        "c42",
        "ü",
        "\"quoted\"",
        "tab\tsep",
        "ped_main_a",
        "",
        "\u{1F6A6}",
    ];
    (0..rng.gen_range(1..3))
        .map(|_| *PARTS.choose(rng).unwrap())
        .collect()
}

pub fn random_message(rng: &mut impl Rng) -> FrameMessage {
    let kind = *KINDS.choose(rng).unwrap();
    let mut m = FrameMessage::new(kind, rng.gen_range(0..1u64 << 50), rng.gen_range(0.0..1e5));
    if rng.gen_bool(0.6) {
        m.client_id = Some(random_text(rng));
    }
    if matches!(kind, MessageKind::Frame | MessageKind::Update) || rng.gen_bool(0.1) {
        m.payload = (0..rng.gen_range(0..6))
            .map(|_| random_state(rng))
            .collect();
    }
    if !matches!(kind, MessageKind::Frame | MessageKind::Update) || rng.gen_bool(0.1) {
        let mut c = Control::default();
        if rng.gen_bool(0.7) {
            c.version = Some(if rng.gen_bool(0.9) {
                PROTOCOL_VERSION.into()
            } else {
                random_text(rng)
            });
        }
        if rng.gen_bool(0.5) {
            c.lockstep = Some(rng.gen());
        }
        c.claim = (0..rng.gen_range(0..3))
            .map(|_| rng.gen_range(0..1000))
            .collect();
        if rng.gen_bool(0.2) {
            c.spawn = vec![random_state(rng)];
        }
        c.assigned = (0..rng.gen_range(0..3))
            .map(|_| rng.gen_range(0..1000))
            .collect();
        if rng.gen_bool(0.3) {
            c.dt = Some(rng.gen_range(0.001..1.0));
        }
        if rng.gen_bool(0.2) {
            c.command = Some(random_text(rng));
        }
        if rng.gen_bool(0.2) {
            c.reason = Some(random_text(rng));
        }
        m.control = Some(c);
    }
    if kind == MessageKind::Frame && rng.gen_bool(0.7) {
        let states = [SignalState::Red, SignalState::Green];
        m.signals = Some(
            (0..rng.gen_range(0..4))
                .map(|i| (format!("g{i}"), *states.choose(rng).unwrap()))
                .collect(),
        );
    }
    m
}
