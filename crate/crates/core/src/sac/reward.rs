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

//! Step reward and completion bonus.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::admittance::{Pose, Wrench};
use crate::error::{invalid, Result};
use crate::quat;

pub const W_GOAL: f64 = 1.0;
pub const W_POSITION: f64 = 0.5;
pub const W_ORIENTATION: f64 = 0.5;
pub const W_FORCE: f64 = 0.5;
pub const W_TORQUE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpisodeStatus {
    Running,
    Finished,
    Terminated,
    Error,
}

impl EpisodeStatus {
    pub fn is_terminal(self) -> bool {
        self != EpisodeStatus::Running
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EpisodeStatus::Running => "running",
            EpisodeStatus::Finished => "finished",
            EpisodeStatus::Terminated => "terminated",
            EpisodeStatus::Error => "error",
        }
    }
}

impl fmt::Display for EpisodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EpisodeStatus {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "running" => Ok(EpisodeStatus::Running),
            "finished" => Ok(EpisodeStatus::Finished),
            "terminated" => Ok(EpisodeStatus::Terminated),
            "error" => Ok(EpisodeStatus::Error),
            other => Err(invalid(format!("unknown episode status '{other}'"))),
        }
    }
}

/// Termination distances per error group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Position (m).
    pub p: f64,
    /// Orientation (rad).
    pub q: f64,
    /// Force (N).
    pub f: f64,
    /// Torque (N·m).
    pub m: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { p: 0.01, q: 0.1, f: 3.0, m: 1.0 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if [self.p, self.q, self.f, self.m].iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(invalid("termination thresholds must be positive"))
        }
    }
}

/// Tracking error magnitudes between the measured and the reference state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackingError {
    pub position: f64,
    pub orientation: f64,
    pub force: f64,
    pub torque: f64,
}

impl TrackingError {
    pub fn between(actual: &Pose, wrench: &Wrench, pose_ref: &Pose, f_ref: &Wrench) -> Self {
        Self {
            position: (actual.p - pose_ref.p).norm(),
            orientation: quat::orientation_error(&actual.q, &pose_ref.q),
            force: (wrench.f - f_ref.f).norm(),
            torque: (wrench.m - f_ref.m).norm(),
        }
    }

    /// Errors divided by their termination distances.
    pub fn normalized(&self, e: &Thresholds) -> [f64; 4] {
        [self.position / e.p, self.orientation / e.q, self.force / e.f, self.torque / e.m]
    }

    /// Whether any group has reached its termination distance.
    pub fn exceeds(&self, e: &Thresholds) -> bool {
        self.normalized(e).iter().any(|x| *x >= 1.0 || x.is_nan())
    }
}

/// `1 − x/√3`, clamped to `[0, 1]`.
pub fn shaping(x: f64) -> f64 {
    (1.0 - x / 3f64.sqrt()).clamp(0.0, 1.0)
}

pub fn completion_term(status: EpisodeStatus) -> f64 {
    match status {
        EpisodeStatus::Finished => 100.0,
        EpisodeStatus::Terminated => -50.0,
        EpisodeStatus::Error => -100.0,
        EpisodeStatus::Running => 0.0,
    }
}

/// Weighted completion bonus plus one shaped term per normalized error group.
pub fn reward(error: &TrackingError, thresholds: &Thresholds, status: EpisodeStatus) -> f64 {
    let [p, q, f, m] = error.normalized(thresholds);
    W_GOAL * completion_term(status)
        + W_POSITION * shaping(p)
        + W_ORIENTATION * shaping(q)
        + W_FORCE * shaping(f)
        + W_TORQUE * shaping(m)
}
