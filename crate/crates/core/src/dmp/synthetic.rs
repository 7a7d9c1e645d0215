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

//! Analytic demonstrations for exercising the fitting pipeline.

use nalgebra::Vector3;
use std::f64::consts::PI;

use super::{DemoSample, Demonstration};
use crate::admittance::{Pose, Wrench};
use crate::error::Result;
use crate::quat::{self, RotVec, UnitQuaternion};

/// Minimum-jerk blend `10u³ − 15u⁴ + 6u⁵`, clamped to `[0, 1]`.
pub fn min_jerk(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// Ten-second 3-axis reach sampled at 100 Hz: a minimum-jerk transfer with
/// slow bumps and a small hand-tremor component, then a one-second hold.
pub fn reach() -> Result<Demonstration> {
    let samples = (0..=1000)
        .map(|k| {
            let t = k as f64 * 0.01;
            let u = (t / 9.0).min(1.0);
            let env = (PI * u).sin().powi(2);
            let s = min_jerk(u);
            let tw = 0.004 * env;
            let p = Vector3::new(
                0.3 + 0.15 * s + 0.03 * (3.0 * PI * u).sin() * env + tw * (7.5 * t).sin(),
                0.2 * s * s + 0.02 * (5.0 * PI * u).sin() * env + tw * (8.3 * t + 1.0).sin(),
                0.4 - 0.1 * s + 0.05 * (2.0 * PI * u).sin() * env + tw * (6.9 * t + 2.0).sin(),
            );
            DemoSample { t, pose: Pose::from_position(p), wrench: Wrench::zero() }
        })
        .collect();
    Demonstration::new(samples)
}

/// Ten-second press at 100 Hz: free approach, contact force stepping to
/// `force` N along −z between 3 s and 7 s (20 ms edges), then release.
pub fn step_contact(force: f64) -> Result<Demonstration> {
    let edge = |t: f64, at: f64| min_jerk((t - at) / 0.02);
    let samples = (0..=1000)
        .map(|k| {
            let t = k as f64 * 0.01;
            let level = edge(t, 3.0) - edge(t, 7.0);
            let s = min_jerk(t / 9.0);
            let p = Vector3::new(0.4 + 0.1 * s, 0.0, 0.3 - 0.05 * min_jerk(t / 3.0) + 0.05 * min_jerk((t - 7.0) / 2.0));
            let wrench = Wrench::from_array([0.0, 0.0, -force * level, 0.0, 0.0, 0.0]);
            DemoSample { t, pose: Pose::from_position(p), wrench }
        })
        .collect();
    Demonstration::new(samples)
}

/// Geodesic minimum-jerk rotation from `start` to `goal` over `duration`
/// seconds at `dt`, position held fixed.
pub fn rotation(start: UnitQuaternion, goal: UnitQuaternion, duration: f64, dt: f64) -> Result<Demonstration> {
    let delta = quat::shortest(quat::multiply(&goal, &start.conjugate())).log();
    let n = (duration / dt).round() as usize;
    let samples = (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            let s = min_jerk(t / (0.9 * duration));
            let q = quat::multiply(&quat::qexp(&RotVec(delta.0 * s)), &start);
            DemoSample { t, pose: Pose::new(Vector3::new(0.4, 0.0, 0.3), q), wrench: Wrench::zero() }
        })
        .collect();
    Demonstration::new(samples)
}
