//! Single vehicle closing on a static obstacle, driven only through the
//! public driver functions.

use rand::Rng;
use taf_twin::behavior::{pedal, step_vehicle, target_velocity, DriverParams, ObstacleObservation};
use taf_twin::model::{ParticipantClass, ParticipantState, Polyline};

#[derive(Debug, Clone, Copy)]
pub struct Approach {
    pub v_set: f64,
    pub a: f64,
    pub a_b: f64,
    pub dt: f64,
    /// Initial distance to the stop point, in units of the stopping envelope.
    pub start_envelopes: f64,
    /// Initial speed as a share of `v_set`.
    pub start_speed_share: f64,
}

impl Approach {
    pub fn random<R: Rng>(rng: &mut R, v_set_min: f64) -> Self {
        Self {
            v_set: rng.gen_range(v_set_min..=30.0),
            a: rng.gen_range(0.5..=5.0),
            a_b: rng.gen_range(0.5..=10.0),
            dt: rng.gen_range(0.005..=0.05),
            start_envelopes: rng.gen_range(1.0..=3.0),
            start_speed_share: rng.gen_range(0.0..=1.0),
        }
    }

    pub fn envelope(&self) -> f64 {
        self.v_set * self.v_set / (2.0 * 0.75 * self.a_b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ApproachResult {
    /// Smallest remaining distance to the stop point over the run.
    pub min_gap: f64,
    pub stopped: bool,
    pub max_speed: f64,
}

/// Obstacle sits `margin` past the stop point; half-lengths are folded into
/// the stop point. Runs until the vehicle rests or `t_max` elapses.
pub fn simulate(ap: &Approach, margin: f64, t_max: f64) -> ApproachResult {
    let params = DriverParams {
        v_mu: ap.v_set,
        v_sigma: 0.0,
        a: ap.a,
        a_b: ap.a_b,
        xi: 0.0,
    };
    let d0 = ap.start_envelopes * ap.envelope();
    let obstacle = d0 + margin;
    let path = Polyline::new(vec![[0.0, 0.0, 0.0], [obstacle + 100.0, 0.0, 0.0]]);
    let mut state = ParticipantState::new(
        1,
        ParticipantClass::Car,
        [0.0; 3],
        0.0,
        ap.start_speed_share * ap.v_set,
    );
    let mut arc = 0.0;
    let mut out = ApproachResult {
        min_gap: d0,
        stopped: false,
        max_speed: state.speed,
    };
    let steps = (t_max / ap.dt).ceil() as usize;
    for _ in 0..steps {
        let d_stop = (obstacle - margin - arc).max(0.0);
        let obs = ObstacleObservation {
            d_stop,
            v_obs: -state.speed,
        };
        let v_target = target_velocity(ap.v_set, ap.a_b, &obs);
        let p = pedal(v_target, state.speed);
        let next = step_vehicle(&state, arc, &path, p, &params, ap.dt);
        state = next.state;
        arc = next.arc;
        out.min_gap = out.min_gap.min(obstacle - margin - arc);
        out.max_speed = out.max_speed.max(state.speed);
        if state.speed == 0.0 && v_target == 0.0 {
            out.stopped = true;
            break;
        }
    }
    out
}
