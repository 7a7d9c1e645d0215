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

//! Simulated contact fixtures, demonstration synthesis and the episode
//! runner used for training.

pub mod demo;
pub mod episode;
pub mod task;
pub mod world;

pub use demo::{synth_demonstration, Script, Waypoint, CONTROL_DT, RECORD_DT};
pub use episode::{Episode, EpisodeConfig, EpisodeStats, Reference, StepResult, ACT_DIM, OBS_DIM};
pub use task::{decode_action, encode_stiffness, Predicate, Task, TaskKind, VicEnv};
pub use world::{ContactWorld, Geometry, Perturbation, Randomization};
