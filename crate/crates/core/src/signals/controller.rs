//! Runtime signal controller shared by all three control modes.
//!
//! The controller walks the program's green windows cycle by cycle. A group
//! only turns green when every conflicting group has been red for at least
//! the configured intergreen, and a green is only started if it can last
//! `min_green`. Both rules are enforced at switching time, so the safety
//! properties hold for any detector input sequence.
//!
//! Actuated modes extend a running green while its detector stays occupied
//! near the end of the window (gap extension), bounded by `max_green` and by
//! the next served onset of every conflicting group. In VRU-optimized mode
//! on-demand windows are only served when a call was registered; a call that
//! arrives after the window opened still gets the rest of that window when at
//! least `min_green` remains.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::program::{ControlMode, SignalGroup, SignalProgram, SignalState};
use super::SignalError;

#[derive(Debug, Clone, PartialEq)]
struct GroupRuntime {
    green: bool,
    green_since: f64,
    red_since: f64,
    end: f64,
    call: bool,
    /// `(cycle index, window index)` of the last window that was served or
    /// skipped, so each window is decided at most once.
    decided: Option<(i64, usize)>,
}

/// Per-tick detector input: vehicle occupancy and VRU calls keyed by group.
pub type Occupancy = BTreeMap<String, bool>;

#[derive(Debug, Clone, PartialEq)]
pub struct SignalController {
    program: Arc<SignalProgram>,
    ids: Arc<[String]>,
    vru: Arc<[bool]>,
    conflicts: Arc<[Vec<usize>]>,
    intergreen: Arc<[Vec<f64>]>,
    state: Vec<GroupRuntime>,
}

use super::program::TIME_EPS as EPS;

impl SignalController {
    pub fn new(program: SignalProgram, groups: &[SignalGroup]) -> Result<Self, SignalError> {
        let mut issues = super::program::check_conflicts(groups);
        issues.extend(program.check(groups));
        if !issues.is_empty() {
            return Err(SignalError::InvalidProgram(issues.join("; ")));
        }
        let ids: Vec<String> = program.groups.iter().map(|p| p.group.clone()).collect();
        let index: BTreeMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut conflicts = vec![Vec::new(); ids.len()];
        let mut vru = vec![false; ids.len()];
        for g in groups {
            let Some(&i) = index.get(g.id.as_str()) else {
                continue;
            };
            vru[i] = g.vru;
            for c in &g.conflicts {
                if let Some(&j) = index.get(c.as_str()) {
                    conflicts[i].push(j);
                }
            }
        }
        let intergreen: Vec<Vec<f64>> = ids
            .iter()
            .map(|a| {
                ids.iter()
                    .map(|b| program.intergreen_between(a, b))
                    .collect()
            })
            .collect();
        let state = ids
            .iter()
            .map(|_| GroupRuntime {
                green: false,
                green_since: f64::NEG_INFINITY,
                red_since: f64::NEG_INFINITY,
                end: f64::NEG_INFINITY,
                call: false,
                decided: None,
            })
            .collect();
        Ok(Self {
            program: Arc::new(program),
            ids: ids.into(),
            vru: vru.into(),
            conflicts: conflicts.into(),
            intergreen: intergreen.into(),
            state,
        })
    }

    pub fn program(&self) -> &SignalProgram {
        &self.program
    }

    pub fn group_ids(&self) -> &[String] {
        &self.ids
    }

    fn index(&self, group: &str) -> Option<usize> {
        self.ids.iter().position(|g| g == group)
    }

    pub fn state(&self, group: &str) -> Result<SignalState, SignalError> {
        let i = self
            .index(group)
            .ok_or_else(|| SignalError::UnknownGroup(group.to_string()))?;
        Ok(if self.state[i].green {
            SignalState::Green
        } else {
            SignalState::Red
        })
    }

    pub fn is_green(&self, group: &str) -> bool {
        self.index(group)
            .map(|i| self.state[i].green)
            .unwrap_or(false)
    }

    pub fn states(&self) -> Vec<(String, SignalState)> {
        self.ids
            .iter()
            .zip(&self.state)
            .map(|(id, s)| {
                (
                    id.clone(),
                    if s.green {
                        SignalState::Green
                    } else {
                        SignalState::Red
                    },
                )
            })
            .collect()
    }

    /// Current green end of every green group.
    pub fn green_ends(&self) -> BTreeMap<String, f64> {
        self.ids
            .iter()
            .zip(&self.state)
            .filter(|(_, s)| s.green)
            .map(|(id, s)| (id.clone(), s.end))
            .collect()
    }

    pub fn has_call(&self, group: &str) -> bool {
        self.index(group)
            .map(|i| self.state[i].call)
            .unwrap_or(false)
    }

    fn actuated(&self) -> bool {
        matches!(
            self.program.mode,
            ControlMode::Actuated | ControlMode::VruOptimized
        )
    }

    fn on_demand(&self, i: usize) -> bool {
        self.program.mode == ControlMode::VruOptimized && self.program.groups[i].on_demand
    }

    /// Window of group `i` containing absolute time `t`, as
    /// `(cycle index, window index, absolute window start, absolute end)`.
    fn window_at(&self, i: usize, t: f64) -> Option<(i64, usize, f64, f64)> {
        let cycle = self.program.cycle;
        let tt = t + EPS;
        let k = (tt / cycle).floor();
        let phase = tt - k * cycle;
        self.program.groups[i]
            .greens
            .iter()
            .enumerate()
            .find(|(_, iv)| iv.contains(phase))
            .map(|(w, iv)| (k as i64, w, k * cycle + iv.start, k * cycle + iv.end))
    }

    /// Next absolute onset of group `j` at or after `t` that would be served
    /// given the current calls. Looks ahead two cycles.
    fn next_served_onset(&self, j: usize, t: f64) -> f64 {
        let cycle = self.program.cycle;
        let k0 = (t / cycle).floor();
        let skip_uncalled = self.on_demand(j) && !self.state[j].call;
        for dk in 0..3 {
            let base = (k0 + dk as f64) * cycle;
            for (w, iv) in self.program.groups[j].greens.iter().enumerate() {
                let start = base + iv.start;
                if start + EPS < t {
                    continue;
                }
                if self.state[j].decided == Some(((k0 as i64) + dk, w)) {
                    continue;
                }
                if skip_uncalled {
                    continue;
                }
                return start;
            }
        }
        f64::INFINITY
    }

    /// Gap extension: a green whose detector is occupied within `gap_time`
    /// of its end is pushed to `t + gap_time`, capped by `max_green` and by
    /// the intergreen to the next served onset of every conflicting group.
    /// Returns the (possibly unchanged) green end of every green group.
    pub fn actuated_step(&mut self, occupancy: &Occupancy, t: f64) -> BTreeMap<String, f64> {
        if self.actuated() {
            for i in 0..self.ids.len() {
                let s = &self.state[i];
                if !s.green || self.vru[i] {
                    continue;
                }
                if !occupancy.get(&self.ids[i]).copied().unwrap_or(false) {
                    continue;
                }
                if !(t + EPS >= s.end - self.program.gap_time && t + EPS < s.end) {
                    continue;
                }
                let mut cap = s.green_since + self.program.max_green;
                for &j in &self.conflicts[i] {
                    let onset = self.next_served_onset(j, s.end);
                    cap = cap.min(onset - self.intergreen[i][j]);
                }
                let proposed = (t + self.program.gap_time).min(cap);
                if proposed > s.end {
                    self.state[i].end = proposed;
                }
            }
        }
        self.green_ends()
    }

    /// Advances the controller to time `t` with the given detector inputs.
    pub fn step(&mut self, t: f64, occupancy: &Occupancy) {
        for i in 0..self.ids.len() {
            if self.vru[i] && occupancy.get(&self.ids[i]).copied().unwrap_or(false) {
                self.state[i].call = true;
            }
        }
        self.actuated_step(occupancy, t);

        for s in &mut self.state {
            if s.green && t + EPS >= s.end {
                s.green = false;
                s.red_since = t;
            }
        }

        for i in 0..self.ids.len() {
            if self.state[i].green {
                continue;
            }
            let Some((k, w, start, end)) = self.window_at(i, t) else {
                continue;
            };
            if self.state[i].decided == Some((k, w)) {
                continue;
            }
            if self.on_demand(i) && !self.state[i].call {
                // stays undecided: a late call may still use the window
                continue;
            }
            let continuing = self.state[i].red_since == t;
            let late = self.on_demand(i) && !continuing && t - start > EPS;
            if late && end - t + EPS < self.program.min_green {
                self.state[i].decided = Some((k, w));
                continue;
            }
            let clear = self.conflicts[i].iter().all(|&j| {
                let c = &self.state[j];
                !c.green && t - c.red_since + EPS >= self.intergreen[j][i]
            });
            if !clear {
                continue;
            }
            let s = &mut self.state[i];
            s.green = true;
            if !continuing {
                s.green_since = t;
            }
            s.end = end;
            s.call = false;
            s.decided = Some((k, w));
        }
    }

    /// Seconds until the group's state is expected to change.
    pub fn time_to_change(&self, group: &str, t: f64) -> Result<f64, SignalError> {
        let i = self
            .index(group)
            .ok_or_else(|| SignalError::UnknownGroup(group.to_string()))?;
        let s = &self.state[i];
        if s.green {
            return Ok((s.end - t).max(0.0));
        }
        let onset = self.next_served_onset(i, t);
        Ok(if onset.is_finite() {
            (onset - t).max(0.0)
        } else {
            self.program.cycle
        })
    }

    /// Quantized state for exhaustive model checking.
    pub fn fingerprint(&self, tick: f64) -> Vec<i64> {
        let q = |v: f64| {
            if v.is_finite() {
                (v / tick).round() as i64
            } else {
                i64::MIN
            }
        };
        let mut out = Vec::with_capacity(self.state.len() * 7);
        for s in &self.state {
            out.push(s.green as i64);
            out.push(q(s.green_since));
            out.push(q(s.red_since));
            out.push(q(s.end));
            out.push(s.call as i64);
            let (k, w) = s
                .decided
                .map(|(k, w)| (k, w as i64))
                .unwrap_or((i64::MIN, -1));
            out.push(k);
            out.push(w);
        }
        out
    }

    pub fn is_vru_group(&self, group: &str) -> bool {
        self.index(group).map(|i| self.vru[i]).unwrap_or(false)
    }

    pub fn conflicts_of(&self, group: &str) -> Vec<&str> {
        self.index(group)
            .map(|i| {
                self.conflicts[i]
                    .iter()
                    .map(|&j| self.ids[j].as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn intergreen(&self, from: &str, to: &str) -> f64 {
        match (self.index(from), self.index(to)) {
            (Some(a), Some(b)) => self.intergreen[a][b],
            _ => 0.0,
        }
    }
}
