//! Exhaustive stepping of a signal controller over every detector input
//! sequence, merging states that share a fingerprint.
//!
//! Min-green is checked without remembering green onsets: a green must be
//! scheduled for at least `min_green` when it starts, its end may only move
//! later, and it may not turn red before that end.

use std::collections::{BTreeMap, HashSet};

use taf_twin::signals::{
    ControlMode, GreenInterval, GroupPlan, Intergreen, Occupancy, SignalController, SignalGroup,
    SignalProgram,
};

const SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckStats {
    pub ticks: usize,
    pub states: usize,
    pub transitions: usize,
    pub max_frontier: usize,
    pub greens_started: usize,
    pub greens_closed: usize,
}

struct Limits {
    max_intergreen: f64,
    vru: Vec<bool>,
}

#[derive(Clone)]
struct Node {
    ctrl: SignalController,
    green: Vec<bool>,
    end: Vec<f64>,
    off_since: Vec<f64>,
}

impl Node {
    /// Fingerprint with the fields that cannot influence the future erased:
    /// start and end of a red group's last green, the green start of groups
    /// that are never extended, and red times older than the longest
    /// intergreen.
    fn key(&self, t: f64, dt: f64, limits: &Limits) -> Vec<i64> {
        let q = |v: f64| {
            if v.is_finite() {
                (v / dt).round() as i64
            } else {
                i64::MIN
            }
        };
        let floor = q(t - limits.max_intergreen) - 1;
        let mut k = self.ctrl.fingerprint(dt);
        for (i, g) in k.chunks_mut(7).enumerate() {
            if g[0] == 0 || limits.vru[i] {
                g[1] = i64::MIN;
            }
            if g[0] == 0 {
                g[3] = i64::MIN;
            }
            g[2] = g[2].max(floor);
        }
        k.extend(self.off_since.iter().zip(&self.green).map(|(&v, &g)| {
            if g {
                i64::MIN
            } else {
                q(v).max(floor)
            }
        }));
        k
    }
}

/// Steps every reachable state from `t = 0` to `horizon` at `dt`, feeding
/// all combinations of detector occupancy and VRU calls. Fails on the first
/// conflicting double green, short green or short intergreen.
pub fn model_check(
    program: SignalProgram,
    groups: &[SignalGroup],
    dt: f64,
    horizon: f64,
) -> Result<CheckStats, String> {
    let ctrl = SignalController::new(program, groups).map_err(|e| e.to_string())?;
    let ids: Vec<String> = ctrl.group_ids().to_vec();
    let n = ids.len();
    let min_green = ctrl.program().min_green;
    let limits = Limits {
        max_intergreen: ids
            .iter()
            .flat_map(|a| ids.iter().map(|b| ctrl.intergreen(a, b)))
            .fold(0.0, f64::max),
        vru: ids.iter().map(|g| ctrl.is_vru_group(g)).collect(),
    };
    let conflicts: Vec<Vec<usize>> = ids
        .iter()
        .map(|g| {
            ctrl.conflicts_of(g)
                .iter()
                .map(|c| ids.iter().position(|x| x == c).unwrap())
                .collect()
        })
        .collect();
    let actuated = ctrl.program().mode != ControlMode::Fixed;
    let inputs: Vec<Occupancy> = (0..1u32 << n)
        .map(|mask| {
            ids.iter()
                .enumerate()
                .map(|(i, g)| (g.clone(), mask & (1 << i) != 0))
                .collect::<BTreeMap<_, _>>()
        })
        .collect();
    // A detector bit can only matter for an uncalled VRU group or a green
    // vehicle group under actuation; all other bits are fixed to false.
    let relevant = |node: &Node| -> u32 {
        (0..n)
            .filter(|&i| {
                if limits.vru[i] {
                    !node.ctrl.has_call(&ids[i])
                } else {
                    actuated && node.green[i]
                }
            })
            .fold(0, |m, i| m | 1 << i)
    };

    let mut stats = CheckStats::default();
    let mut frontier = vec![Node {
        ctrl,
        green: vec![false; n],
        end: vec![f64::NEG_INFINITY; n],
        off_since: vec![f64::NEG_INFINITY; n],
    }];
    let ticks = (horizon / dt).round() as usize;
    for k in 0..=ticks {
        let t = k as f64 * dt;
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for node in &frontier {
            let rel = relevant(node);
            for occ in inputs
                .iter()
                .enumerate()
                .filter(|(mask, _)| *mask as u32 & !rel == 0)
                .map(|(_, o)| o)
            {
                let mut m = node.clone();
                m.ctrl.step(t, occ);
                stats.transitions += 1;
                let ends = m.ctrl.green_ends();
                for i in 0..n {
                    let now_green = m.ctrl.is_green(&ids[i]);
                    for &j in &conflicts[i] {
                        if now_green && m.ctrl.is_green(&ids[j]) {
                            return Err(format!(
                                "t={t:.1}: {} and {} green together",
                                ids[i], ids[j]
                            ));
                        }
                    }
                    match (m.green[i], now_green) {
                        (false, true) => {
                            for &j in &conflicts[i] {
                                let need = m.ctrl.intergreen(&ids[j], &ids[i]);
                                let gap = t - m.off_since[j];
                                if gap + SLACK < need {
                                    return Err(format!(
                                        "t={t:.1}: {} green {gap:.2} s after {} (intergreen {need})",
                                        ids[i], ids[j]
                                    ));
                                }
                            }
                            let end = ends[&ids[i]];
                            if end - t + SLACK < min_green {
                                return Err(format!(
                                    "t={t:.1}: {} green scheduled for {:.2} s",
                                    ids[i],
                                    end - t
                                ));
                            }
                            m.end[i] = end;
                            stats.greens_started += 1;
                        }
                        (true, true) => {
                            let end = ends[&ids[i]];
                            if end + SLACK < m.end[i] {
                                return Err(format!(
                                    "t={t:.1}: {} green end moved earlier",
                                    ids[i]
                                ));
                            }
                            m.end[i] = end;
                        }
                        (true, false) => {
                            if t + SLACK < m.end[i] {
                                return Err(format!(
                                    "t={t:.1}: {} turned red before its end {:.2}",
                                    ids[i], m.end[i]
                                ));
                            }
                            m.off_since[i] = t;
                            stats.greens_closed += 1;
                        }
                        (false, false) => {}
                    }
                    m.green[i] = now_green;
                }
                if seen.insert(m.key(t, dt, &limits)) {
                    next.push(m);
                }
            }
        }
        stats.states += next.len();
        stats.max_frontier = stats.max_frontier.max(next.len());
        stats.ticks += 1;
        frontier = next;
    }
    Ok(stats)
}

/// One cycle plus the longest green an extension can reach.
pub fn horizon(p: &SignalProgram) -> f64 {
    p.cycle + p.max_green
}

/// Tight program: extensions press right against the conflicting onset.
pub fn tight(mode: ControlMode) -> (SignalProgram, Vec<SignalGroup>) {
    let groups = vec![
        SignalGroup {
            id: "a".into(),
            vru: false,
            conflicts: vec!["b".into(), "p".into()],
        },
        SignalGroup {
            id: "b".into(),
            vru: false,
            conflicts: vec!["a".into()],
        },
        SignalGroup {
            id: "p".into(),
            vru: true,
            conflicts: vec!["a".into()],
        },
    ];
    let plan = |g: &str, greens: &[(f64, f64)], on_demand| GroupPlan {
        group: g.into(),
        greens: greens
            .iter()
            .map(|&(start, end)| GreenInterval { start, end })
            .collect(),
        on_demand,
    };
    let program = SignalProgram {
        id: "tight".into(),
        cycle: 40.0,
        mode,
        min_green: 5.0,
        gap_time: 3.0,
        max_green: 20.0,
        detector_range_m: 30.0,
        groups: vec![
            plan("a", &[(0.0, 12.0)], false),
            plan("b", &[(16.0, 34.0)], false),
            plan("p", &[(16.0, 30.0)], true),
        ],
        intergreen: vec![Intergreen {
            from: "a".into(),
            to: "p".into(),
            seconds: 3.0,
        }],
        default_intergreen: 4.0,
        progressive: vec![],
    };
    (program, groups)
}
