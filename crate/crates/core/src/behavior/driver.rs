//! Closed-form virtual driver and explicit Euler longitudinal dynamics.
//!
//! A vehicle cruises at its set speed `v_set = v_mu + xi * v_sigma`. When an
//! obstacle sits `d_stop` meters ahead, the driver blends between a term
//! proportional to the obstacle's relative speed and the set speed:
//!
//! ```text
//! a_max    = 3 a_b / 4
//! t0       = v_set / a_max
//! dx       = v_set t0 - a_max t0^2 / 2
//! v_target = lerp(v_obs d_stop / norm, v_set, clamp(d_stop / dx, 0, 1))
//! pedal    = clamp(v_target - v_cur, -1, 1)
//! ```
//!
//! `v_target` is clamped to `[0, v_set]`. `norm` defaults to 50 m.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{normalize_yaw, ParticipantState, Polyline};

pub const DEFAULT_LERP_NORM_M: f64 = 50.0;

/// Per-vehicle driver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverParams {
    pub v_mu: f64,
    pub v_sigma: f64,
    /// Max acceleration (m/s^2).
    pub a: f64,
    /// Max braking deceleration (m/s^2).
    pub a_b: f64,
    /// Per-vehicle draw in [-1, 1].
    pub xi: f64,
}

impl DriverParams {
    pub fn check(&self) -> Result<(), String> {
        if !(self.a > 0.0 && self.a_b > 0.0) {
            return Err(format!(
                "a and a_b must be positive (a={}, a_b={})",
                self.a, self.a_b
            ));
        }
        if !(self.v_sigma >= 0.0 && self.v_mu >= self.v_sigma) {
            return Err(format!(
                "need v_mu >= v_sigma >= 0 (v_mu={}, v_sigma={})",
                self.v_mu, self.v_sigma
            ));
        }
        if !(-1.0..=1.0).contains(&self.xi) {
            return Err(format!("xi {} outside [-1, 1]", self.xi));
        }
        Ok(())
    }

    /// Draws `xi` uniformly from [-1, 1].
    pub fn with_random_xi<R: Rng + ?Sized>(mut self, rng: &mut R) -> Self {
        self.xi = rng.gen_range(-1.0..=1.0);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleObservation {
    /// Distance at which to stop (m), never negative.
    pub d_stop: f64,
    /// Obstacle speed along the ego heading minus ego speed (m/s).
    pub v_obs: f64,
}

pub fn draw_set_speed(params: &DriverParams) -> f64 {
    params.v_mu + params.xi * params.v_sigma
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Stopping envelope `dx` built literally from `a_max` and `t0`.
pub fn stopping_envelope(v_set: f64, a_b: f64) -> f64 {
    let a_max = 3.0 * a_b / 4.0;
    let t0 = v_set / a_max;
    v_set * t0 - 0.5 * a_max * t0 * t0
}

pub fn target_velocity(v_set: f64, a_b: f64, obs: &ObstacleObservation) -> f64 {
    target_velocity_with_norm(v_set, a_b, obs, DEFAULT_LERP_NORM_M)
}

pub fn target_velocity_with_norm(
    v_set: f64,
    a_b: f64,
    obs: &ObstacleObservation,
    lerp_norm_m: f64,
) -> f64 {
    let dx = stopping_envelope(v_set, a_b);
    let d_stop = obs.d_stop.max(0.0);
    let t = if dx > 0.0 {
        (d_stop / dx).clamp(0.0, 1.0)
    } else {
        1.0
    };
    lerp(obs.v_obs * d_stop / lerp_norm_m, v_set, t).clamp(0.0, v_set.max(0.0))
}

pub fn pedal(v_target: f64, v_cur: f64) -> f64 {
    (v_target - v_cur).clamp(-1.0, 1.0)
}

pub fn pedal_acceleration(pedal: f64, params: &DriverParams) -> f64 {
    if pedal >= 0.0 {
        pedal * params.a
    } else {
        pedal * params.a_b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleStep {
    pub state: ParticipantState,
    pub arc: f64,
}

/// One explicit Euler step along `path`: the position advances with the
/// prior speed, then the speed integrates the pedal acceleration and is
/// floored at zero. Yaw follows the path tangent.
pub fn step_vehicle(
    state: &ParticipantState,
    arc: f64,
    path: &Polyline,
    pedal: f64,
    params: &DriverParams,
    dt: f64,
) -> VehicleStep {
    let acceleration = pedal_acceleration(pedal, params);
    let new_arc = arc + state.speed * dt;
    let speed = (state.speed + acceleration * dt).max(0.0);
    let (position, heading) = path.sample(new_arc);
    let yaw = normalize_yaw(heading);
    let mut next = state.clone();
    next.timestamp = state.timestamp + dt;
    next.position = position;
    next.yaw_rate = if dt > 0.0 {
        normalize_yaw(yaw - state.yaw) / dt
    } else {
        0.0
    };
    next.yaw = yaw;
    next.speed = speed;
    VehicleStep {
        state: next,
        arc: new_arc,
    }
}
