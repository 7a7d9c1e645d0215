// Copyright 2026 The vic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Scripted demonstrations executed by a stiff admittance controller.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::world::ContactWorld;
use crate::admittance::{self, AdmittanceState, ImpedanceGains, Pose, Wrench};
use crate::dmp::synthetic::min_jerk;
use crate::dmp::{DemoSample, Demonstration};
use crate::error::{invalid, Result};
use crate::quat::{self, RotVec};

/// Controller tick of the simulated robot.
pub const CONTROL_DT: f64 = 1e-3;
/// Recording period of demonstrations.
pub const RECORD_DT: f64 = 1e-2;
/// Stiffness of the demonstrating controller.
pub const DEMO_K_P: f64 = 2000.0;
pub const DEMO_K_O: f64 = 40.0;
/// Axis-aligned reachable box `[min, max]` per world axis.
pub const WORKSPACE: [[f64; 2]; 3] = [[-1.0, 1.0], [-1.0, 1.0], [-0.5, 1.5]];

/// Reference depth below a surface that makes a controller of stiffness
/// `k_ctrl` press with `force` on a contact of stiffness `k_env`.
pub fn press_depth(force: f64, k_ctrl: f64, k_env: f64) -> f64 {
    force * (1.0 / k_ctrl + 1.0 / k_env)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub pose: Pose,
    /// Minimum-jerk transfer time from the previous waypoint (s).
    pub duration: f64,
    /// Dwell at this waypoint afterwards (s).
    #[serde(default)]
    pub hold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub start: Pose,
    #[serde(default)]
    pub initial_hold: f64,
    pub waypoints: Vec<Waypoint>,
}

impl Script {
    pub fn duration(&self) -> f64 {
        self.initial_hold + self.waypoints.iter().map(|w| w.duration + w.hold).sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |p: &Vector3<f64>| (0..3).all(|i| p[i] >= WORKSPACE[i][0] && p[i] <= WORKSPACE[i][1]);
        if !inside(&self.start.p) || !self.start.is_finite() {
            return Err(invalid("script start leaves the workspace"));
        }
        if !(self.initial_hold >= 0.0) {
            return Err(invalid("initial hold must be non-negative"));
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !w.pose.is_finite() || !inside(&w.pose.p) {
                return Err(invalid(format!("waypoint {i} leaves the workspace")));
            }
            if !(w.duration > 0.0) || !(w.hold >= 0.0) || !w.duration.is_finite() || !w.hold.is_finite() {
                return Err(invalid(format!("waypoint {i} needs a positive duration and non-negative hold")));
            }
        }
        if self.duration() < 2.0 * RECORD_DT {
            return Err(invalid("script too short to record"));
        }
        Ok(())
    }

    /// Reference pose and linear velocity at time `t`.
    pub fn reference(&self, t: f64) -> (Pose, Vector3<f64>) {
        let mut from = self.start;
        let mut t0 = self.initial_hold;
        if t < t0 {
            return (from, Vector3::zeros());
        }
        for w in &self.waypoints {
            if t < t0 + w.duration {
                let u = (t - t0) / w.duration;
                let s = min_jerk(u);
                let rate = 30.0 * u * u * (1.0 - u) * (1.0 - u) / w.duration;
                let dp = w.pose.p - from.p;
                let turn = quat::shortest(w.pose.q * from.q.conjugate()).log();
                let q = quat::qexp(&RotVec(turn.0 * s)) * from.q;
                return (Pose::new(from.p + dp * s, q), dp * rate);
            }
            t0 += w.duration;
            from = w.pose;
            if t < t0 + w.hold {
                return (from, Vector3::zeros());
            }
            t0 += w.hold;
        }
        (from, Vector3::zeros())
    }
}

/// Runs `script` on a stiff admittance controller against `world` at 1 kHz
/// and records the commanded pose and contact wrench at 100 Hz.
pub fn synth_demonstration(world: &ContactWorld, script: &Script) -> Result<Demonstration> {
    world.validate()?;
    script.validate()?;
    let gains = ImpedanceGains::uniform(DEMO_K_P, DEMO_K_O)?;
    let ticks = (script.duration() / CONTROL_DT).round() as usize;
    let every = (RECORD_DT / CONTROL_DT).round() as usize;
    let mut state = AdmittanceState::default();
    let mut samples = Vec::with_capacity(ticks / every + 1);
    for k in 0..=ticks {
        let t = k as f64 * CONTROL_DT;
        let (reference, v_ref) = script.reference(t);
        let pose = admittance::commanded_pose(&reference, &state);
        let v = v_ref + reference.q.rotate(&state.v_e);
        let wrench = world.contact_wrench(&pose, &v);
        if k % every == 0 {
            samples.push(DemoSample { t, pose, wrench });
        }
        state = admittance::step(&state, &gains, &wrench, &Wrench::zero(), CONTROL_DT)?;
        if !state.is_finite() {
            return Err(invalid("demonstration controller diverged"));
        }
    }
    Demonstration::new(samples)
}
