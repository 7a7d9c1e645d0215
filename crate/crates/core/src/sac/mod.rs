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

//! Soft actor-critic for stiffness adaptation.

pub mod adam;
pub mod agent;
pub mod buffer;
pub mod mlp;
pub mod policy;
pub mod reward;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Only meaningful when `done`.
    pub success: bool,
}

/// Affine observation normalization `(o - offset) * scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsScaling {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ObsScaling {
    pub fn identity(dim: usize) -> Self {
        Self { offset: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    pub fn apply(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter().zip(&self.offset).zip(&self.scale).map(|((o, c), s)| (o - c) * s).collect()
    }
}

/// Episodic environment with continuous actions in `[-1, 1]^act_dim`.
pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<Step>;

    fn observation_scaling(&self) -> ObsScaling {
        ObsScaling::identity(self.obs_dim())
    }

    /// Serialized mid-episode state, for checkpoints.
    fn snapshot(&self) -> Result<serde_json::Value>;
    fn restore(&mut self, snapshot: &serde_json::Value) -> Result<()>;
}
