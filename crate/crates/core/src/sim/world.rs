//! The simulated world: spawns demand, steps every agent against the prior
//! frame, runs the signal controller and collects lost-time records.
//!
//! Frame `n` holds the participant states and signal states at `n * dt`.
//! A tick steps all agents with the signal states of frame `n`, spawns due
//! arrivals, then advances the controller with the detector picture of the
//! new frame.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::route::{build_route, Route};
use super::scenario::{Scenario, ScenarioConfig};
use crate::behavior::{
    draw_set_speed, obstacle_scan, pedal, step_vehicle, stopping_envelope,
    target_velocity_with_norm, DriverParams, LaneCorridor, ScanConfig, StopLine,
};
use crate::model::{
    normalize_yaw, GeoAnchor, ParticipantClass, ParticipantId, ParticipantState, Source,
};
use crate::signals::{
    lost_time, LostTimeRecord, Occupancy, SignalController, SignalError, SignalState,
};

/// Ghost participants are numbered from here so they never shift the ids
/// of regular traffic.
pub const GHOST_ID_BASE: ParticipantId = 1 << 40;

pub const DEFAULT_WALK_SPEED: f64 = 1.4;
pub const DEFAULT_BICYCLE_SPEED: f64 = 4.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("route {index}: {message}")]
    Route { index: usize, message: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("no victim vehicle on lane {lane} at t={t}")]
    NoVictim { lane: String, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostChannel {
    /// Fed into the obstacle scans of kernel vehicles.
    Perception,
    /// Present only in the V2X message stream.
    V2xOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostSpec {
    pub lane: String,
    pub offset_ahead: f64,
    pub ghost_speed: f64,
    pub start_t: f64,
    pub duration: f64,
    #[serde(default = "default_channel")]
    pub channel: GhostChannel,
}

fn default_channel() -> GhostChannel {
    GhostChannel::Perception
}

/// Ground truth for one injected ghost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostLabel {
    pub ghost_id: ParticipantId,
    pub victim_id: ParticipantId,
    pub start_t: f64,
    pub end_t: f64,
    pub channel: GhostChannel,
}

#[derive(Debug, Clone, PartialEq)]
enum Motion {
    Vehicle {
        route: usize,
        arc: f64,
        params: DriverParams,
        v_set: f64,
        next_stop: usize,
        saw_green: bool,
        committed: bool,
    },
    Vru {
        route: usize,
        arc: f64,
        speed: f64,
        next_stop: usize,
    },
    Ghost {
        route: usize,
        arc: f64,
        until: f64,
        channel: GhostChannel,
    },
    /// Client-spawned participant without a route; dead-reckons when no
    /// update arrives.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
struct Agent {
    state: ParticipantState,
    motion: Motion,
    t_entry: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Arrival {
    t: f64,
    entry: usize,
    xi: f64,
}

pub struct World {
    config: ScenarioConfig,
    anchor: GeoAnchor,
    dt: f64,
    frame_no: u64,
    routes: Vec<Route>,
    controller: Option<SignalController>,
    agents: BTreeMap<ParticipantId, Agent>,
    pending: VecDeque<Arrival>,
    next_id: ParticipantId,
    next_ghost: ParticipantId,
    lost: Vec<LostTimeRecord>,
    ghosts: Vec<GhostLabel>,
    scan: ScanConfig,
}

fn arrivals(config: &ScenarioConfig) -> VecDeque<Arrival> {
    let mut out = Vec::new();
    for (i, d) in config.demand.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64 + 1);
        let mut times = d.times.clone();
        if d.rate_per_h > 0.0 {
            let rate = d.rate_per_h / 3600.0;
            let mut t = 0.0;
            loop {
                let u: f64 = rng.gen();
                t += -(1.0 - u).ln() / rate;
                if t >= config.duration {
                    break;
                }
                times.push(t);
            }
        }
        times.sort_by(f64::total_cmp);
        for t in times {
            out.push(Arrival {
                t,
                entry: i,
                xi: rng.gen_range(-1.0..=1.0),
            });
        }
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.entry.cmp(&b.entry)));
    out.into()
}

impl World {
    pub fn new(scenario: &Scenario) -> Result<Self, SimError> {
        let config = scenario.config.clone();
        let network = &scenario.network;
        let routes = config
            .demand
            .iter()
            .enumerate()
            .map(|(index, d)| {
                build_route(network, &d.route).map_err(|message| SimError::Route { index, message })
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (index, r) in routes.iter().enumerate() {
            if let Some(stop) = r
                .stops
                .iter()
                .find(|s| !network.signal_groups.iter().any(|g| g.id == s.group))
            {
                return Err(SimError::Route {
                    index,
                    message: format!("unknown signal group {}", stop.group),
                });
            }
        }
        let controller = match &config.signal_program {
            Some(id) => {
                let program = network.program(id).expect("checked by Scenario").clone();
                Some(SignalController::new(program, &network.signal_groups)?)
            }
            None => None,
        };
        let mut world = Self {
            dt: config.effective_dt(),
            scan: config.behavior.scan(),
            pending: arrivals(&config),
            config,
            anchor: network.anchor,
            frame_no: 0,
            routes,
            controller,
            agents: BTreeMap::new(),
            next_id: 1,
            next_ghost: GHOST_ID_BASE,
            lost: Vec::new(),
            ghosts: Vec::new(),
        };
        world.spawn_due(0.0);
        world.step_controller(0.0);
        Ok(world)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.frame_no as f64 * self.dt
    }

    pub fn frame_no(&self) -> u64 {
        self.frame_no
    }

    pub fn anchor(&self) -> GeoAnchor {
        self.anchor
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// True once the configured duration has been simulated.
    pub fn finished(&self) -> bool {
        self.time() + 0.5 * self.dt >= self.config.duration
    }

    /// Current participants ordered by id.
    pub fn frame(&self) -> Vec<ParticipantState> {
        self.agents.values().map(|a| a.state.clone()).collect()
    }

    pub fn participant(&self, id: ParticipantId) -> Option<&ParticipantState> {
        self.agents.get(&id).map(|a| &a.state)
    }

    pub fn signal_states(&self) -> BTreeMap<String, SignalState> {
        self.controller
            .as_ref()
            .map(|c| c.states().into_iter().collect())
            .unwrap_or_default()
    }

    pub fn controller(&self) -> Option<&SignalController> {
        self.controller.as_ref()
    }

    pub fn lost_time_records(&self) -> &[LostTimeRecord] {
        &self.lost
    }

    pub fn ghost_labels(&self) -> &[GhostLabel] {
        &self.ghosts
    }

    pub fn is_ghost(&self, id: ParticipantId) -> bool {
        matches!(
            self.agents.get(&id).map(|a| &a.motion),
            Some(Motion::Ghost { .. })
        )
    }

    /// Advances one tick with kernel models only.
    pub fn step(&mut self) {
        self.step_with(&BTreeMap::new());
    }

    /// Advances one tick. Participants listed in `overrides` take the given
    /// state instead of being stepped by their kernel model.
    pub fn step_with(&mut self, overrides: &BTreeMap<ParticipantId, ParticipantState>) {
        let t_next = (self.frame_no + 1) as f64 * self.dt;
        let perceived: Vec<ParticipantState> = self
            .agents
            .values()
            .filter(|a| {
                !matches!(
                    a.motion,
                    Motion::Ghost {
                        channel: GhostChannel::V2xOnly,
                        ..
                    }
                )
            })
            .map(|a| a.state.clone())
            .collect();

        let mut next = BTreeMap::new();
        let mut exits = Vec::new();
        for (&id, agent) in &self.agents {
            let stepped = match overrides.get(&id) {
                Some(state) => Some(self.apply_override(agent, state, t_next)),
                None => self.step_agent(agent, &perceived, t_next),
            };
            match stepped {
                Some(a) if self.at_route_end(&a) => exits.push(a),
                Some(a) => {
                    next.insert(id, a);
                }
                None => {}
            }
        }
        for a in &exits {
            self.record_exit(a, t_next);
        }
        self.agents = next;
        self.frame_no += 1;
        self.spawn_due(t_next);
        self.step_controller(t_next);
    }

    fn at_route_end(&self, agent: &Agent) -> bool {
        match agent.motion {
            Motion::Vehicle { route, arc, .. } | Motion::Vru { route, arc, .. } => {
                arc >= self.routes[route].length()
            }
            _ => false,
        }
    }

    fn record_exit(&mut self, agent: &Agent, t_exit: f64) {
        let (route, v_ff) = match agent.motion {
            Motion::Vehicle { route, v_set, .. } => (route, v_set),
            Motion::Vru { route, speed, .. } => (route, speed),
            _ => return,
        };
        let length = self.routes[route].length();
        let trajectory = [(agent.t_entry, 0.0), (t_exit.max(agent.t_entry), length)];
        if let Ok(rec) = lost_time(agent.state.id, agent.state.class, &trajectory, v_ff) {
            self.lost.push(rec);
        }
    }

    fn is_green(&self, group: &str) -> bool {
        self.controller.as_ref().is_none_or(|c| c.is_green(group))
    }

    fn apply_override(&self, agent: &Agent, state: &ParticipantState, t_next: f64) -> Agent {
        let mut a = agent.clone();
        a.state = state.clone();
        a.state.id = agent.state.id;
        a.state.timestamp = t_next;
        a.state.yaw = normalize_yaw(a.state.yaw);
        a.state.source = Source::ExternalClient;
        if let Motion::Vehicle { route, arc, .. } | Motion::Vru { route, arc, .. } = &mut a.motion {
            let path = &self.routes[*route].path;
            if let Some(p) = path.project_within(a.state.xy(), *arc - 20.0, *arc + 60.0) {
                *arc = p.s;
            }
        }
        a
    }

    fn step_agent(
        &self,
        agent: &Agent,
        perceived: &[ParticipantState],
        t_next: f64,
    ) -> Option<Agent> {
        let dt = self.dt;
        let mut a = agent.clone();
        match &mut a.motion {
            Motion::Vehicle {
                route,
                arc,
                params,
                v_set,
                next_stop,
                saw_green,
                committed,
            } => {
                let r = &self.routes[*route];
                let half = a.state.dimensions.length / 2.0;
                while r
                    .stops
                    .get(*next_stop)
                    .is_some_and(|s| *arc + half >= s.arc)
                {
                    *next_stop += 1;
                    *committed = false;
                    *saw_green = true;
                }
                let mut lines = Vec::new();
                if let Some(stop) = r.stops.get(*next_stop) {
                    if self.is_green(&stop.group) {
                        *saw_green = true;
                        *committed = false;
                    } else {
                        if *saw_green && !*committed {
                            // dilemma zone: a vehicle that cannot stop keeps going
                            let gap = stop.arc - *arc - half;
                            *committed = gap < a.state.speed * a.state.speed / (2.0 * params.a_b);
                        }
                        *saw_green = false;
                        if !*committed {
                            lines.push(StopLine { arc: stop.arc });
                        }
                    }
                }
                let corridor = LaneCorridor {
                    path: &r.path,
                    arc: *arc,
                    lane_width: r.width_at(*arc),
                };
                let hit = obstacle_scan(&a.state, &corridor, perceived, &lines, &self.scan);
                let target = match hit {
                    Some(h) => target_velocity_with_norm(
                        *v_set,
                        params.a_b,
                        &h.observation,
                        self.config.behavior.lerp_norm_m,
                    ),
                    None => *v_set,
                };
                let step = step_vehicle(
                    &a.state,
                    *arc,
                    &r.path,
                    pedal(target, a.state.speed),
                    params,
                    dt,
                );
                a.state = step.state;
                a.state.timestamp = t_next;
                *arc = step.arc;
            }
            Motion::Vru {
                route,
                arc,
                speed,
                next_stop,
            } => {
                let r = &self.routes[*route];
                let mut s = *arc + *speed * dt;
                if let Some(stop) = r.stops.get(*next_stop) {
                    if s >= stop.arc {
                        if self.is_green(&stop.group) {
                            *next_stop += 1;
                        } else {
                            s = stop.arc.max(*arc);
                        }
                    }
                }
                let (position, heading) = r.path.sample(s);
                let yaw = normalize_yaw(heading);
                a.state.speed = (s - *arc) / dt;
                a.state.yaw_rate = normalize_yaw(yaw - a.state.yaw) / dt;
                a.state.yaw = yaw;
                a.state.position = position;
                a.state.timestamp = t_next;
                *arc = s;
            }
            Motion::Ghost {
                route, arc, until, ..
            } => {
                if t_next + 1e-9 >= *until {
                    return None;
                }
                let r = &self.routes[*route];
                *arc = (*arc + a.state.speed * dt).min(r.length());
                let (position, heading) = r.path.sample(*arc);
                a.state.position = position;
                a.state.yaw = normalize_yaw(heading);
                a.state.timestamp = t_next;
            }
            Motion::Free => {
                let (sin, cos) = a.state.yaw.sin_cos();
                a.state.position[0] += a.state.speed * cos * dt;
                a.state.position[1] += a.state.speed * sin * dt;
                a.state.yaw = normalize_yaw(a.state.yaw + a.state.yaw_rate * dt);
                a.state.timestamp = t_next;
            }
        }
        Some(a)
    }

    /// Spawns every due arrival whose entry point is clear. Blocked arrivals
    /// wait in order; their lost time still counts from the scheduled time.
    fn spawn_due(&mut self, t: f64) {
        let mut blocked_lanes: BTreeSet<String> = BTreeSet::new();
        let mut keep = VecDeque::new();
        while let Some(arr) = self.pending.front() {
            if arr.t > t + 1e-9 {
                break;
            }
            let arr = self.pending.pop_front().expect("front exists");
            let first = self.routes[arr.entry].first_lane().to_string();
            if blocked_lanes.contains(&first) || !self.try_spawn(&arr, t) {
                blocked_lanes.insert(first);
                keep.push_back(arr);
            }
        }
        while let Some(arr) = keep.pop_back() {
            self.pending.push_front(arr);
        }
    }

    fn try_spawn(&mut self, arr: &Arrival, t: f64) -> bool {
        let demand = &self.config.demand[arr.entry];
        let route = &self.routes[arr.entry];
        let class = demand.class;
        let mut state = ParticipantState::new(0, class, [0.0; 3], 0.0, 0.0);
        let (position, heading) = route.path.sample(0.0);
        state.position = position;
        state.yaw = normalize_yaw(heading);
        state.timestamp = t;
        let motion = if class.is_vru() {
            let speed = demand
                .speed
                .unwrap_or(if class == ParticipantClass::Bicycle {
                    DEFAULT_BICYCLE_SPEED
                } else {
                    DEFAULT_WALK_SPEED
                });
            state.speed = speed;
            Motion::Vru {
                route: arr.entry,
                arc: 0.0,
                speed,
                next_stop: 0,
            }
        } else {
            let params = self.config.behavior.driver(arr.xi);
            let v_set = draw_set_speed(&params);
            let half = state.dimensions.length / 2.0;
            let mut speed = v_set;
            if let Some((gap, v_lead)) = self.gap_at_entry(route.first_lane(), half) {
                if gap < self.scan.d_margin + 1.0 {
                    return false;
                }
                if gap < stopping_envelope(v_set, params.a_b) + self.scan.d_margin {
                    speed = v_set.min(v_lead);
                }
            }
            state.speed = speed;
            let saw_green = route.stops.first().is_none_or(|s| self.is_green(&s.group));
            Motion::Vehicle {
                route: arr.entry,
                arc: 0.0,
                params,
                v_set,
                next_stop: 0,
                saw_green,
                committed: false,
            }
        };
        state.id = self.next_id;
        self.next_id += 1;
        self.agents.insert(
            state.id,
            Agent {
                state,
                motion,
                t_entry: arr.t,
            },
        );
        true
    }

    /// Bumper gap to the nearest vehicle on `lane` measured from its start,
    /// with that vehicle's speed.
    fn gap_at_entry(&self, lane: &str, half: f64) -> Option<(f64, f64)> {
        self.agents
            .values()
            .filter_map(|a| match a.motion {
                Motion::Vehicle { route, arc, .. }
                    if self.routes[route].lane_at(arc) == Some(lane) =>
                {
                    Some((arc - a.state.dimensions.length / 2.0 - half, a.state.speed))
                }
                _ => None,
            })
            .min_by(|x, y| x.0.total_cmp(&y.0))
    }

    fn occupancy(&self) -> Occupancy {
        let mut occ = Occupancy::new();
        let range = self
            .controller
            .as_ref()
            .map_or(0.0, |c| c.program().detector_range_m);
        for a in self.agents.values() {
            match a.motion {
                Motion::Vehicle {
                    route,
                    arc,
                    next_stop,
                    ..
                } => {
                    if let Some(stop) = self.routes[route].stops.get(next_stop) {
                        let ahead = stop.arc - arc - a.state.dimensions.length / 2.0;
                        if ahead > 0.0 && ahead <= range {
                            occ.insert(stop.group.clone(), true);
                        }
                    }
                }
                Motion::Vru {
                    route,
                    arc,
                    next_stop,
                    ..
                } => {
                    for stop in self.routes[route].stops.iter().skip(next_stop) {
                        if stop.arc - arc > self.config.vru_call_range_m {
                            break;
                        }
                        occ.insert(stop.group.clone(), true);
                    }
                }
                _ => {}
            }
        }
        occ
    }

    fn step_controller(&mut self, t: f64) {
        if self.controller.is_some() {
            let occ = self.occupancy();
            if let Some(c) = self.controller.as_mut() {
                c.step(t, &occ);
            }
        }
    }

    /// Adds a client-owned participant. Its id is assigned by the kernel.
    pub fn spawn_external(&mut self, mut state: ParticipantState) -> ParticipantId {
        state.id = self.next_id;
        self.next_id += 1;
        state.timestamp = self.time();
        state.source = Source::ExternalClient;
        state.yaw = normalize_yaw(state.yaw);
        self.agents.insert(
            state.id,
            Agent {
                state: state.clone(),
                motion: Motion::Free,
                t_entry: self.time(),
            },
        );
        state.id
    }

    pub fn remove(&mut self, id: ParticipantId) -> bool {
        self.agents.remove(&id).is_some()
    }

    /// Lane the participant currently drives on, if it follows a route.
    pub fn lane_of(&self, id: ParticipantId) -> Option<&str> {
        match self.agents.get(&id)?.motion {
            Motion::Vehicle { route, arc, .. } | Motion::Vru { route, arc, .. } => {
                self.routes[route].lane_at(arc)
            }
            _ => None,
        }
    }

    /// Places a ghost relative to the lowest-id vehicle on `spec.lane`. A
    /// zero duration injects nothing.
    pub fn inject_ghost(&mut self, spec: &GhostSpec) -> Result<Option<GhostLabel>, SimError> {
        let victim = self.agents.iter().find_map(|(&id, a)| match a.motion {
            Motion::Vehicle { route, arc, .. }
                if self.routes[route].lane_at(arc) == Some(spec.lane.as_str()) =>
            {
                Some((id, route, arc))
            }
            _ => None,
        });
        let Some((victim_id, route, arc)) = victim else {
            return Err(SimError::NoVictim {
                lane: spec.lane.clone(),
                t: self.time(),
            });
        };
        if spec.duration <= 0.0 {
            return Ok(None);
        }
        let r = &self.routes[route];
        let s = (arc + spec.offset_ahead).clamp(0.0, r.length());
        let (position, heading) = r.path.sample(s);
        let mut state = ParticipantState::new(
            self.next_ghost,
            ParticipantClass::Car,
            position,
            heading,
            spec.ghost_speed,
        );
        state.timestamp = self.time();
        state.source = Source::V2x;
        self.next_ghost += 1;
        let label = GhostLabel {
            ghost_id: state.id,
            victim_id,
            start_t: self.time(),
            end_t: self.time() + spec.duration,
            channel: spec.channel,
        };
        self.agents.insert(
            state.id,
            Agent {
                state,
                motion: Motion::Ghost {
                    route,
                    arc: s,
                    until: label.end_t,
                    channel: spec.channel,
                },
                t_entry: self.time(),
            },
        );
        self.ghosts.push(label.clone());
        Ok(Some(label))
    }
}
