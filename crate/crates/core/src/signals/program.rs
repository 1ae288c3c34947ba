//! Signal groups and timed green-interval programs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::SignalError;

pub type GroupId = String;

/// Switching times are evaluated at `t + TIME_EPS` so that clock values
/// accumulated in floating point land on the intended side of a boundary.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalGroup {
    pub id: GroupId,
    /// Pedestrian or cyclist group.
    #[serde(default)]
    pub vru: bool,
    /// Groups that must never be green together with this one.
    #[serde(default)]
    pub conflicts: Vec<GroupId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Fixed,
    Actuated,
    VruOptimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalState {
    Red,
    Green,
}

/// Half-open green window `[start, end)` in cycle seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenInterval {
    pub start: f64,
    pub end: f64,
}

impl GreenInterval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, phase: f64) -> bool {
        phase >= self.start && phase < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPlan {
    pub group: GroupId,
    pub greens: Vec<GreenInterval>,
    /// Served only when a call is registered (VRU-optimized mode).
    #[serde(default)]
    pub on_demand: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intergreen {
    pub from: GroupId,
    pub to: GroupId,
    pub seconds: f64,
}

/// Two consecutive crossings over a central island.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressiveCrossing {
    pub first: GroupId,
    pub second: GroupId,
    pub island_distance: f64,
    pub walk_speed: f64,
}

fn default_gap_time() -> f64 {
    3.0
}

fn default_max_green() -> f64 {
    60.0
}

fn default_detector_range() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProgram {
    pub id: String,
    pub cycle: f64,
    pub mode: ControlMode,
    pub min_green: f64,
    #[serde(default = "default_gap_time")]
    pub gap_time: f64,
    #[serde(default = "default_max_green")]
    pub max_green: f64,
    /// How far upstream of a stop line vehicle detectors reach (meters).
    #[serde(default = "default_detector_range")]
    pub detector_range_m: f64,
    pub groups: Vec<GroupPlan>,
    #[serde(default)]
    pub intergreen: Vec<Intergreen>,
    /// Clearance used for conflicting pairs without an explicit entry.
    #[serde(default)]
    pub default_intergreen: f64,
    #[serde(default)]
    pub progressive: Vec<ProgressiveCrossing>,
}

impl SignalProgram {
    pub fn plan(&self, group: &str) -> Option<&GroupPlan> {
        self.groups.iter().find(|p| p.group == group)
    }

    pub fn intergreen_between(&self, from: &str, to: &str) -> f64 {
        self.intergreen
            .iter()
            .find(|e| e.from == from && e.to == to)
            .map(|e| e.seconds)
            .unwrap_or(self.default_intergreen)
    }

    pub fn phase(&self, t: f64) -> f64 {
        t.rem_euclid(self.cycle)
    }

    /// Checks the program against the conflict relation of `groups`.
    /// Returns every violation found.
    pub fn check(&self, groups: &[SignalGroup]) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.cycle > 0.0) {
            issues.push(format!("program {}: cycle must be positive", self.id));
            return issues;
        }
        if self.min_green < 0.0 || self.gap_time < 0.0 || self.max_green < self.min_green {
            issues.push(format!(
                "program {}: inconsistent min_green/gap_time/max_green",
                self.id
            ));
        }
        let known: BTreeSet<&str> = groups.iter().map(|g| g.id.as_str()).collect();
        for plan in &self.groups {
            if !known.contains(plan.group.as_str()) {
                issues.push(format!("program {}: unknown group {}", self.id, plan.group));
            }
            let mut prev_end = f64::NEG_INFINITY;
            for iv in &plan.greens {
                if !(iv.start >= 0.0 && iv.end <= self.cycle && iv.start < iv.end) {
                    issues.push(format!(
                        "program {}: group {} interval [{}, {}) outside [0, {})",
                        self.id, plan.group, iv.start, iv.end, self.cycle
                    ));
                }
                if iv.start < prev_end {
                    issues.push(format!(
                        "program {}: group {} intervals overlap or are unsorted",
                        self.id, plan.group
                    ));
                }
                prev_end = iv.end;
            }
            for duration in realized_durations(&plan.greens, self.cycle) {
                if duration + 1e-9 < self.min_green {
                    issues.push(format!(
                        "program {}: group {} green of {duration} s shorter than min_green {}",
                        self.id, plan.group, self.min_green
                    ));
                }
            }
        }
        let conflicts = conflict_pairs(groups);
        for (a, b) in &conflicts {
            let (Some(pa), Some(pb)) = (self.plan(a), self.plan(b)) else {
                continue;
            };
            for ga in &pa.greens {
                for gb in &pb.greens {
                    let need_ab = ga.duration() + self.intergreen_between(a, b);
                    let need_ba = gb.duration() + self.intergreen_between(b, a);
                    let ab = (gb.start - ga.start).rem_euclid(self.cycle);
                    let ba = (ga.start - gb.start).rem_euclid(self.cycle);
                    if ab + 1e-9 < need_ab || ba + 1e-9 < need_ba {
                        issues.push(format!(
                            "program {}: conflicting groups {a} [{}, {}) and {b} [{}, {}) violate intergreen",
                            self.id, ga.start, ga.end, gb.start, gb.end
                        ));
                    }
                }
            }
        }
        for pc in &self.progressive {
            if self.plan(&pc.first).is_none() || self.plan(&pc.second).is_none() {
                issues.push(format!(
                    "program {}: progressive crossing references unknown group",
                    self.id
                ));
            }
            if !(pc.island_distance > 0.0 && pc.walk_speed > 0.0) {
                issues.push(format!(
                    "program {}: progressive crossing needs positive distance and speed",
                    self.id
                ));
            }
        }
        issues
    }
}

/// Durations of green phases when windows touching across the cycle
/// boundary are joined.
fn realized_durations(greens: &[GreenInterval], cycle: f64) -> Vec<f64> {
    if greens.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<f64> = Vec::new();
    let mut cur = greens[0].duration();
    for w in greens.windows(2) {
        if (w[1].start - w[0].end).abs() < 1e-9 {
            cur += w[1].duration();
        } else {
            out.push(cur);
            cur = w[1].duration();
        }
    }
    out.push(cur);
    let first = greens[0];
    let last = greens[greens.len() - 1];
    if out.len() > 1 && first.start.abs() < 1e-9 && (last.end - cycle).abs() < 1e-9 {
        let tail = out.pop().unwrap_or(0.0);
        out[0] += tail;
    } else if out.len() == 1 && first.start.abs() < 1e-9 && (last.end - cycle).abs() < 1e-9 {
        out[0] = f64::INFINITY;
    }
    out
}

/// Unordered conflicting pairs, each listed once.
pub fn conflict_pairs(groups: &[SignalGroup]) -> Vec<(GroupId, GroupId)> {
    let mut pairs = BTreeSet::new();
    for g in groups {
        for c in &g.conflicts {
            let (a, b) = if g.id <= *c {
                (g.id.clone(), c.clone())
            } else {
                (c.clone(), g.id.clone())
            };
            pairs.insert((a, b));
        }
    }
    pairs.into_iter().collect()
}

/// Checks symmetry and irreflexivity of the conflict relation.
pub fn check_conflicts(groups: &[SignalGroup]) -> Vec<String> {
    let mut issues = Vec::new();
    let by_id: BTreeMap<&str, &SignalGroup> = groups.iter().map(|g| (g.id.as_str(), g)).collect();
    for g in groups {
        for c in &g.conflicts {
            if *c == g.id {
                issues.push(format!("signal group {} conflicts with itself", g.id));
                continue;
            }
            match by_id.get(c.as_str()) {
                None => issues.push(format!(
                    "signal group {} conflicts with unknown group {c}",
                    g.id
                )),
                Some(other) if !other.conflicts.contains(&g.id) => {
                    issues.push(format!("conflict {} -> {c} is not symmetric", g.id))
                }
                _ => {}
            }
        }
    }
    issues
}

/// Pure fixed-time state lookup: green iff `t mod cycle` falls in a green
/// window of the group.
pub fn signal_state(
    program: &SignalProgram,
    group: &str,
    t: f64,
) -> Result<SignalState, SignalError> {
    let plan = program
        .plan(group)
        .ok_or_else(|| SignalError::UnknownGroup(group.to_string()))?;
    let phase = program.phase(t + TIME_EPS);
    Ok(if plan.greens.iter().any(|iv| iv.contains(phase)) {
        SignalState::Green
    } else {
        SignalState::Red
    })
}

/// Island-to-island walking time between two consecutive crossings.
pub fn progressive_crossing_offset(
    island_distance: f64,
    walk_speed: f64,
) -> Result<f64, SignalError> {
    if !(island_distance > 0.0 && walk_speed > 0.0) {
        return Err(SignalError::InvalidProgram(format!(
            "progressive crossing needs positive distance and speed, got {island_distance} m at {walk_speed} m/s"
        )));
    }
    Ok(island_distance / walk_speed)
}

/// Shifts the second crossing's green onset by the walking offset and
/// stretches it so that anyone entering during the first green reaches the
/// island while the second is still green.
pub fn apply_progressive_crossing(
    program: &mut SignalProgram,
    crossing: &ProgressiveCrossing,
) -> Result<(), SignalError> {
    let offset = progressive_crossing_offset(crossing.island_distance, crossing.walk_speed)?;
    let first = program
        .plan(&crossing.first)
        .ok_or_else(|| SignalError::UnknownGroup(crossing.first.clone()))?
        .greens
        .clone();
    let cycle = program.cycle;
    let second = program
        .groups
        .iter_mut()
        .find(|p| p.group == crossing.second)
        .ok_or_else(|| SignalError::UnknownGroup(crossing.second.clone()))?;
    let mut greens = Vec::with_capacity(first.len());
    for iv in &first {
        let start = iv.start + offset;
        let end = iv.end + offset;
        if end > cycle {
            return Err(SignalError::InvalidProgram(format!(
                "shifted green [{start}, {end}) of {} leaves the cycle",
                crossing.second
            )));
        }
        greens.push(GreenInterval { start, end });
    }
    second.greens = greens;
    if !program.progressive.contains(crossing) {
        program.progressive.push(crossing.clone());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn one_group(greens: Vec<GreenInterval>) -> (SignalProgram, Vec<SignalGroup>) {
        let program = SignalProgram {
            id: "p".into(),
            cycle: 60.0,
            mode: ControlMode::Fixed,
            min_green: 5.0,
            gap_time: 3.0,
            max_green: 40.0,
            detector_range_m: 30.0,
            groups: vec![GroupPlan {
                group: "g".into(),
                greens,
                on_demand: false,
            }],
            intergreen: vec![],
            default_intergreen: 0.0,
            progressive: vec![],
        };
        (
            program,
            vec![SignalGroup {
                id: "g".into(),
                vru: false,
                conflicts: vec![],
            }],
        )
    }

    #[test]
    fn state_lookup_is_cyclic_and_half_open() {
        let (p, _) = one_group(vec![GreenInterval {
            start: 0.0,
            end: 25.0,
        }]);
        assert_eq!(signal_state(&p, "g", 10.0).unwrap(), SignalState::Green);
        assert_eq!(signal_state(&p, "g", 70.0).unwrap(), SignalState::Green);
        assert_eq!(signal_state(&p, "g", 25.0).unwrap(), SignalState::Red);
        assert_eq!(signal_state(&p, "g", 59.9).unwrap(), SignalState::Red);
        assert!(matches!(
            signal_state(&p, "x", 1.0),
            Err(SignalError::UnknownGroup(_))
        ));
    }

    #[test]
    fn offsets() {
        assert!((progressive_crossing_offset(6.0, 1.2).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(progressive_crossing_offset(3.5, 3.5).unwrap(), 1.0);
        assert!(progressive_crossing_offset(0.0, 1.0).is_err());
        assert!(progressive_crossing_offset(1.0, 0.0).is_err());
    }

    #[test]
    fn wrapped_phase_joins_for_min_green() {
        let greens = vec![
            GreenInterval {
                start: 0.0,
                end: 2.0,
            },
            GreenInterval {
                start: 55.0,
                end: 60.0,
            },
        ];
        assert_eq!(realized_durations(&greens, 60.0), vec![7.0]);
        let (p, groups) = one_group(greens);
        assert!(p.check(&groups).is_empty());
        let (p, groups) = one_group(vec![GreenInterval {
            start: 10.0,
            end: 12.0,
        }]);
        assert_eq!(p.check(&groups).len(), 1);
    }

    #[test]
    fn conflict_relation_checks() {
        let groups = vec![
            SignalGroup {
                id: "a".into(),
                vru: false,
                conflicts: vec!["b".into(), "a".into()],
            },
            SignalGroup {
                id: "b".into(),
                vru: false,
                conflicts: vec![],
            },
        ];
        let issues = check_conflicts(&groups);
        assert_eq!(issues.len(), 2, "{issues:?}");
    }

    #[test]
    fn intergreen_violation_found() {
        let groups = vec![
            SignalGroup {
                id: "a".into(),
                vru: false,
                conflicts: vec!["b".into()],
            },
            SignalGroup {
                id: "b".into(),
                vru: false,
                conflicts: vec!["a".into()],
            },
        ];
        let mut program = one_group(vec![]).0;
        program.default_intergreen = 4.0;
        program.groups = vec![
            GroupPlan {
                group: "a".into(),
                greens: vec![GreenInterval {
                    start: 0.0,
                    end: 20.0,
                }],
                on_demand: false,
            },
            GroupPlan {
                group: "b".into(),
                greens: vec![GreenInterval {
                    start: 22.0,
                    end: 50.0,
                }],
                on_demand: false,
            },
        ];
        assert_eq!(program.check(&groups).len(), 1);
        program.groups[1].greens[0].start = 24.0;
        assert!(program.check(&groups).is_empty());
        // b -> a: 50 + 4 = 54 <= 60 wraps fine; stretch b to 58 and it fails
        program.groups[1].greens[0].end = 58.0;
        assert_eq!(program.check(&groups).len(), 1);
    }

    #[test]
    fn progressive_shift() {
        let groups = vec![
            SignalGroup {
                id: "a".into(),
                vru: true,
                conflicts: vec![],
            },
            SignalGroup {
                id: "b".into(),
                vru: true,
                conflicts: vec![],
            },
        ];
        let mut program = one_group(vec![]).0;
        program.groups = vec![
            GroupPlan {
                group: "a".into(),
                greens: vec![GreenInterval {
                    start: 30.0,
                    end: 42.0,
                }],
                on_demand: false,
            },
            GroupPlan {
                group: "b".into(),
                greens: vec![GreenInterval {
                    start: 30.0,
                    end: 36.0,
                }],
                on_demand: false,
            },
        ];
        let pc = ProgressiveCrossing {
            first: "a".into(),
            second: "b".into(),
            island_distance: 6.0,
            walk_speed: 1.2,
        };
        apply_progressive_crossing(&mut program, &pc).unwrap();
        let b = program.plan("b").unwrap();
        assert_eq!(
            b.greens,
            vec![GreenInterval {
                start: 35.0,
                end: 47.0
            }]
        );
        assert!(program.check(&groups).is_empty());
    }
}
