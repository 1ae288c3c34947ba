//! Built-in demo scenarios: a four-arm signalized intersection with a
//! two-stage pedestrian crossing over the main road, and a straight road for
//! the ghost-vehicle attack.
//!
//! Main road runs east-west with a central island, the side road north-south.
//! Both signal programs share the vehicle greens; they differ only in how the
//! two crossing stages are timed.

use super::scenario::{BehaviorConfig, DemandEntry, Environment, ScenarioConfig};
use super::world::{GhostChannel, GhostSpec};
use crate::model::{
    GeoAnchor, Junction, LaneConnection, LaneGeometry, LaneKind, ParticipantClass, Point3,
    RoadNetwork,
};
use crate::signals::{
    apply_progressive_crossing, ControlMode, GreenInterval, GroupPlan, Intergreen,
    ProgressiveCrossing, SignalGroup, SignalProgram,
};

pub const DEMO_NETWORK_FILE: &str = "demo_network.json";
pub const GHOST_NETWORK_FILE: &str = "ghost_network.json";

/// Walking distance between the two waiting positions of the crossing.
pub const ISLAND_DISTANCE_M: f64 = 7.0;
pub const DEMO_WALK_SPEED: f64 = 1.4;

const CYCLE: f64 = 100.0;

fn lane(id: &str, kind: LaneKind, width: f64, pts: &[[f64; 2]]) -> LaneGeometry {
    LaneGeometry {
        id: id.into(),
        centerline: pts.iter().map(|p| [p[0], p[1], 0.0]).collect(),
        width,
        successor_ids: vec![],
        lane_kind: kind,
    }
}

fn conn(from: &str, to: &str, curve: &[[f64; 2]], group: Option<&str>) -> LaneConnection {
    LaneConnection {
        from: from.into(),
        to: to.into(),
        curve: curve
            .iter()
            .map(|p| -> Point3 { [p[0], p[1], 0.0] })
            .collect(),
        signal_group: group.map(Into::into),
    }
}

fn group(id: &str, vru: bool, conflicts: &[&str]) -> SignalGroup {
    SignalGroup {
        id: id.into(),
        vru,
        conflicts: conflicts.iter().map(|c| c.to_string()).collect(),
    }
}

fn plan(group: &str, greens: &[(f64, f64)], on_demand: bool) -> GroupPlan {
    GroupPlan {
        group: group.into(),
        greens: greens
            .iter()
            .map(|&(start, end)| GreenInterval { start, end })
            .collect(),
        on_demand,
    }
}

fn intergreens() -> Vec<Intergreen> {
    let ig = |from: &str, to: &str, seconds| Intergreen {
        from: from.into(),
        to: to.into(),
        seconds,
    };
    vec![
        ig("main", "side", 5.0),
        ig("side", "main", 5.0),
        ig("main", "ped_main_a", 5.0),
        ig("main", "ped_main_b", 5.0),
        ig("ped_main_a", "main", 6.0),
        ig("ped_main_b", "main", 6.0),
        ig("side", "ped_side", 5.0),
        ig("ped_side", "side", 6.0),
    ]
}

fn program(
    id: &str,
    mode: ControlMode,
    on_demand: bool,
    a: (f64, f64),
    b: (f64, f64),
) -> SignalProgram {
    SignalProgram {
        id: id.into(),
        cycle: CYCLE,
        mode,
        min_green: 5.0,
        gap_time: 3.0,
        max_green: 60.0,
        detector_range_m: 30.0,
        groups: vec![
            plan("main", &[(0.0, 58.0)], false),
            plan("side", &[(63.0, 88.0)], false),
            plan("ped_main_a", &[a], on_demand),
            plan("ped_main_b", &[b], on_demand),
            plan("ped_side", &[(2.0, 50.0)], on_demand),
        ],
        intergreen: intergreens(),
        default_intergreen: 5.0,
        progressive: vec![],
    }
}

/// Existing timing: the two stages are served one after the other, so
/// pedestrians stop on the island.
pub fn baseline_program() -> SignalProgram {
    program(
        "nopt",
        ControlMode::Fixed,
        false,
        (63.0, 77.0),
        (79.0, 93.0),
    )
}

/// Actuated timing with on-demand VRU greens and the second stage shifted by
/// the walking time across the island.
pub fn optimized_program() -> SignalProgram {
    let mut p = program(
        "opt",
        ControlMode::VruOptimized,
        true,
        (63.0, 88.0),
        (63.0, 88.0),
    );
    let crossing = ProgressiveCrossing {
        first: "ped_main_a".into(),
        second: "ped_main_b".into(),
        island_distance: ISLAND_DISTANCE_M,
        walk_speed: DEMO_WALK_SPEED,
    };
    apply_progressive_crossing(&mut p, &crossing).expect("demo crossing is valid");
    p
}

pub fn demo_network() -> RoadNetwork {
    let road = |id: &str, pts: &[[f64; 2]]| lane(id, LaneKind::Road, 3.5, pts);
    let walk = |id: &str, pts: &[[f64; 2]]| lane(id, LaneKind::Pedestrian, 3.0, pts);
    let lanes = vec![
        road("w_in", &[[-150.0, -3.5], [-17.0, -3.5]]),
        road("e_out", &[[12.0, -3.5], [150.0, -3.5]]),
        road("e_in", &[[150.0, 3.5], [12.0, 3.5]]),
        road("w_out", &[[-17.0, 3.5], [-150.0, 3.5]]),
        road("s_in", &[[1.75, -150.0], [1.75, -10.0]]),
        road("n_out", &[[1.75, 19.0], [1.75, 150.0]]),
        road("n_in", &[[-1.75, 150.0], [-1.75, 19.0]]),
        road("s_out", &[[-1.75, -10.0], [-1.75, -150.0]]),
        // two-stage crossing of the main road, west leg
        walk("pn_approach", &[[-14.0, -30.0], [-14.0, -6.0]]),
        walk("pn_island", &[[-14.0, -1.0], [-14.0, 1.0]]),
        walk("pn_exit", &[[-14.0, 6.0], [-14.0, 30.0]]),
        walk("ps_approach", &[[-13.0, 30.0], [-13.0, 6.0]]),
        walk("ps_island", &[[-13.0, 1.0], [-13.0, -1.0]]),
        walk("ps_exit", &[[-13.0, -6.0], [-13.0, -30.0]]),
        // crossing of the side road, north leg
        walk("pe_approach", &[[-30.0, 14.0], [-6.0, 14.0]]),
        walk("pe_exit", &[[6.0, 14.0], [30.0, 14.0]]),
        walk("pw_approach", &[[30.0, 15.0], [6.0, 15.0]]),
        walk("pw_exit", &[[-6.0, 15.0], [-30.0, 15.0]]),
    ];
    let junctions = vec![Junction {
        id: "center".into(),
        connections: vec![
            conn(
                "w_in",
                "e_out",
                &[[-17.0, -3.5], [12.0, -3.5]],
                Some("main"),
            ),
            conn("e_in", "w_out", &[[12.0, 3.5], [-17.0, 3.5]], Some("main")),
            conn(
                "s_in",
                "n_out",
                &[[1.75, -10.0], [1.75, 19.0]],
                Some("side"),
            ),
            conn(
                "n_in",
                "s_out",
                &[[-1.75, 19.0], [-1.75, -10.0]],
                Some("side"),
            ),
            conn(
                "pn_approach",
                "pn_island",
                &[[-14.0, -6.0], [-14.0, -1.0]],
                Some("ped_main_a"),
            ),
            conn(
                "pn_island",
                "pn_exit",
                &[[-14.0, 1.0], [-14.0, 6.0]],
                Some("ped_main_b"),
            ),
            conn(
                "ps_approach",
                "ps_island",
                &[[-13.0, 6.0], [-13.0, 1.0]],
                Some("ped_main_b"),
            ),
            conn(
                "ps_island",
                "ps_exit",
                &[[-13.0, -1.0], [-13.0, -6.0]],
                Some("ped_main_a"),
            ),
            conn(
                "pe_approach",
                "pe_exit",
                &[[-6.0, 14.0], [6.0, 14.0]],
                Some("ped_side"),
            ),
            conn(
                "pw_approach",
                "pw_exit",
                &[[6.0, 15.0], [-6.0, 15.0]],
                Some("ped_side"),
            ),
        ],
    }];
    RoadNetwork {
        anchor: GeoAnchor {
            origin_lat: 49.0069,
            origin_lon: 8.4037,
            origin_alt: 115.0,
        },
        lanes,
        junctions,
        signal_groups: vec![
            group("main", false, &["side", "ped_main_a", "ped_main_b"]),
            group("side", false, &["main", "ped_side"]),
            group("ped_main_a", true, &["main"]),
            group("ped_main_b", true, &["main"]),
            group("ped_side", true, &["side"]),
        ],
        signal_programs: vec![baseline_program(), optimized_program()],
    }
}

fn stream(
    route: &[&str],
    class: ParticipantClass,
    rate_per_h: f64,
    speed: Option<f64>,
) -> DemandEntry {
    DemandEntry {
        route: route.iter().map(|s| s.to_string()).collect(),
        class,
        rate_per_h,
        times: vec![],
        speed,
    }
}

/// About 280 vehicles and 30 pedestrians per 600 s.
pub fn demo_demand() -> Vec<DemandEntry> {
    use ParticipantClass::*;
    let walk = Some(DEMO_WALK_SPEED);
    vec![
        stream(&["w_in", "e_out"], Car, 630.0, None),
        stream(&["w_in", "e_out"], Truck, 30.0, None),
        stream(&["e_in", "w_out"], Car, 630.0, None),
        stream(&["e_in", "w_out"], Truck, 30.0, None),
        stream(&["s_in", "n_out"], Car, 170.0, None),
        stream(&["n_in", "s_out"], Car, 170.0, None),
        stream(
            &["pn_approach", "pn_island", "pn_exit"],
            Pedestrian,
            60.0,
            walk,
        ),
        stream(
            &["ps_approach", "ps_island", "ps_exit"],
            Pedestrian,
            60.0,
            walk,
        ),
        stream(&["pe_approach", "pe_exit"], Pedestrian, 30.0, walk),
        stream(&["pw_approach", "pw_exit"], Pedestrian, 30.0, walk),
    ]
}

pub fn demo_config(program: &str, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        network: DEMO_NETWORK_FILE.into(),
        behavior: BehaviorConfig::default(),
        signal_program: Some(program.into()),
        demand: demo_demand(),
        duration: 600.0,
        dt: 0.05,
        seed,
        environment: Environment {
            time_of_day: "16:00".into(),
            weather: "clear".into(),
            season: "summer".into(),
        },
        vru_call_range_m: 10.0,
    }
}

pub fn ghost_network() -> RoadNetwork {
    RoadNetwork {
        anchor: GeoAnchor {
            origin_lat: 49.0069,
            origin_lon: 8.4037,
            origin_alt: 115.0,
        },
        lanes: vec![lane(
            "road",
            LaneKind::Road,
            3.5,
            &[[0.0, 0.0], [1000.0, 0.0]],
        )],
        junctions: vec![],
        signal_groups: vec![],
        signal_programs: vec![],
    }
}

/// One victim cruising at 10 m/s plus light following traffic.
pub fn ghost_config() -> ScenarioConfig {
    let mut victim = stream(&["road"], ParticipantClass::Car, 0.0, None);
    victim.times = vec![0.0];
    ScenarioConfig {
        network: GHOST_NETWORK_FILE.into(),
        behavior: BehaviorConfig {
            v_mu: 10.0,
            v_sigma: 0.0,
            ..BehaviorConfig::default()
        },
        signal_program: None,
        demand: vec![
            victim,
            stream(&["road"], ParticipantClass::Car, 360.0, None),
        ],
        duration: 60.0,
        dt: 0.05,
        seed: 7,
        environment: Environment {
            time_of_day: "12:00".into(),
            weather: "clear".into(),
            season: "spring".into(),
        },
        vru_call_range_m: 10.0,
    }
}

pub fn ghost_attack() -> GhostSpec {
    GhostSpec {
        lane: "road".into(),
        offset_ahead: 20.0,
        ghost_speed: 0.0,
        start_t: 10.0,
        duration: 8.0,
        channel: GhostChannel::Perception,
    }
}
