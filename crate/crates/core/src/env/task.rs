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

//! Task presets and the reinforcement-learning environment wrapper.

use std::sync::Arc;

use nalgebra::Vector3;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::demo::{press_depth, Script, Waypoint, DEMO_K_P};
use super::episode::{Episode, EpisodeConfig, EpisodeState, EpisodeStats, Reference, ACT_DIM, OBS_DIM};
use super::world::{ContactWorld, Geometry, Randomization, DEFAULT_K_ENV};
use crate::admittance::{ImpedanceGains, Pose, Stiffness, K_O_MAX, K_O_MIN, K_P_MAX, K_P_MIN};
use crate::dmp::DmpModel;
use crate::error::{invalid, Error, Result};
use crate::quat::{self, RotVec};
use crate::sac::reward::EpisodeStatus;
use crate::sac::{Environment, ObsScaling, Step};

/// Condition for labelling a completed run `finished`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Predicate {
    /// Reaching the end of the reference is enough.
    Complete,
    /// Final TCP at least `depth` below `surface` (fixture coordinates).
    MinDepth { surface: f64, depth: f64 },
    /// TCP reached `reach_y` and touched the strip for at least `coverage`
    /// of the contact phase.
    Tape { reach_y: f64, coverage: f64 },
}

impl Predicate {
    pub fn holds(&self, s: &EpisodeStats) -> bool {
        match *self {
            Predicate::Complete => true,
            Predicate::MinDepth { surface, depth } => surface - s.final_position.z >= depth,
            Predicate::Tape { reach_y, coverage } => s.max_y >= reach_y && s.coverage() >= coverage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    FreeSpace,
    #[serde(rename = "wall-1dof")]
    Wall,
    PegInHole,
    Tape,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::FreeSpace, TaskKind::Wall, TaskKind::PegInHole, TaskKind::Tape];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::FreeSpace => "free-space",
            TaskKind::Wall => "wall-1dof",
            TaskKind::PegInHole => "peg-in-hole",
            TaskKind::Tape => "tape",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| invalid(format!("unknown task '{s}'")))
    }
}

/// A fixture, the script that demonstrates the skill on it, the per-trial
/// randomization, and the success predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub kind: TaskKind,
    pub world: ContactWorld,
    pub script: Script,
    pub randomization: Randomization,
    /// Direction the fixture moves under a positive offset.
    pub offset_axis: Vector3<f64>,
    pub predicate: Predicate,
}

fn at(x: f64, y: f64, z: f64) -> Pose {
    Pose::from_position(Vector3::new(x, y, z))
}

fn wp(pose: Pose, duration: f64, hold: f64) -> Waypoint {
    Waypoint { pose, duration, hold }
}

/// Press force of the contact scripts (N).
pub const PRESS_FORCE: f64 = 10.0;
/// Force against the tape end fixture (N).
pub const FIXTURE_FORCE: f64 = 8.0;
/// Height above a surface where contact scripts switch to a slow press (m).
pub const APPROACH_GAP: f64 = 0.002;

impl Task {
    pub fn preset(kind: TaskKind) -> Self {
        let k = DEFAULT_K_ENV;
        match kind {
            TaskKind::FreeSpace => {
                let turn = quat::qexp(&RotVec(Vector3::new(0.0, 0.0, 0.25)));
                Task {
                    kind,
                    world: ContactWorld::new(Geometry::FreeSpace).expect("valid preset"),
                    script: Script {
                        start: at(0.4, 0.0, 0.3),
                        initial_hold: 0.5,
                        waypoints: vec![
                            wp(Pose::new(Vector3::new(0.5, 0.1, 0.25), turn), 3.0, 0.5),
                            wp(at(0.45, 0.05, 0.3), 2.0, 0.5),
                        ],
                    },
                    randomization: Randomization::default(),
                    offset_axis: Vector3::z(),
                    predicate: Predicate::Complete,
                }
            }
            TaskKind::Wall => {
                let d = press_depth(PRESS_FORCE, DEMO_K_P, k);
                Task {
                    kind,
                    world: ContactWorld::new(Geometry::Wall { height: 0.0 }).expect("valid preset"),
                    script: Script {
                        start: at(0.4, 0.0, 0.04),
                        initial_hold: 0.5,
                        waypoints: vec![
                            wp(at(0.4, 0.0, APPROACH_GAP), 1.5, 0.2),
                            wp(at(0.4, 0.0, -d), 1.5, 3.0),
                            wp(at(0.4, 0.0, 0.04), 2.0, 0.5),
                        ],
                    },
                    randomization: Randomization { shift_sd: [0.0, 0.0, 0.0015], ..Default::default() },
                    offset_axis: Vector3::z(),
                    predicate: Predicate::Complete,
                }
            }
            TaskKind::PegInHole => {
                let d = press_depth(5.0, DEMO_K_P, k);
                Task {
                    kind,
                    world: ContactWorld::new(Geometry::PegInHole {
                        surface: 0.0,
                        center: [0.5, 0.0],
                        hole_radius: 0.01025,
                        peg_radius: 0.01,
                        depth: 0.01,
                    })
                    .expect("valid preset"),
                    script: Script {
                        start: at(0.5, 0.0, 0.03),
                        initial_hold: 0.5,
                        waypoints: vec![wp(at(0.5, 0.0, -0.01 - d), 3.0, 0.5), wp(at(0.5, 0.0, -0.007), 1.0, 0.5)],
                    },
                    randomization: Randomization { shift_sd: [1e-4, 1e-4, 0.0], ..Default::default() },
                    offset_axis: Vector3::x(),
                    predicate: Predicate::MinDepth { surface: 0.0, depth: 0.005 },
                }
            }
            TaskKind::Tape => {
                let dz = press_depth(PRESS_FORCE, DEMO_K_P, k);
                let dy = press_depth(FIXTURE_FORCE, DEMO_K_P, k);
                let y_end = 0.06;
                Task {
                    kind,
                    world: ContactWorld::new(Geometry::TapeChannel {
                        surface: 0.0,
                        x_center: 0.4,
                        half_width: 0.003,
                        crown_radius: 0.05,
                        tilt: 0.0,
                        drop: 0.005,
                        y_start: -0.07,
                        y_end,
                        fixture_height: 0.02,
                    })
                    .expect("valid preset"),
                    script: Script {
                        start: at(0.4, -0.05, 0.03),
                        initial_hold: 0.5,
                        waypoints: vec![
                            wp(at(0.4, -0.05, APPROACH_GAP), 1.5, 0.2),
                            wp(at(0.4, -0.05, -dz), 1.5, 0.5),
                            wp(at(0.4, y_end - 5e-4, -dz), 6.0, 0.0),
                            wp(at(0.4, y_end + dy, -dz), 1.5, 0.5),
                            wp(at(0.4, 0.05, 0.03), 1.5, 0.5),
                        ],
                    },
                    randomization: Randomization { shift_sd: [3e-4, 3e-4, 3e-4], tilt_sd: 0.1, force_noise_sd: 0.0 },
                    // the fixture comes 1 mm closer per mm of offset
                    offset_axis: -Vector3::y(),
                    predicate: Predicate::Tape { reach_y: y_end - 0.002, coverage: 0.95 },
                }
            }
        }
    }

    /// The fixture displaced by `mm` millimetres along the offset axis.
    pub fn world_with_offset(&self, mm: f64) -> ContactWorld {
        let mut w = self.world;
        w.offset += self.offset_axis * (mm * 1e-3);
        w
    }
}

/// Maps a normalized action in `[-1, 1]⁶` affinely onto the stiffness ranges.
pub fn decode_action(a: &[f64]) -> Result<Stiffness> {
    if a.len() != ACT_DIM {
        return Err(invalid(format!("action needs {ACT_DIM} entries, got {}", a.len())));
    }
    Ok(Stiffness::from_fn(|i, _| {
        let (lo, hi) = if i < 3 { (K_P_MIN, K_P_MAX) } else { (K_O_MIN, K_O_MAX) };
        let u = if a[i].is_nan() { 0.0 } else { a[i].clamp(-1.0, 1.0) };
        lo + 0.5 * (u + 1.0) * (hi - lo)
    }))
}

/// Inverse of [`decode_action`] for stiffness inside the ranges.
pub fn encode_stiffness(k: &Stiffness) -> Vec<f64> {
    (0..ACT_DIM)
        .map(|i| {
            let (lo, hi) = if i < 3 { (K_P_MIN, K_P_MAX) } else { (K_O_MIN, K_O_MAX) };
            (2.0 * (k[i] - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
        })
        .collect()
}

/// Variable-impedance episodes of one task and one fitted skill.
#[derive(Debug, Clone)]
pub struct VicEnv {
    task: Task,
    world: ContactWorld,
    reference: Arc<Reference>,
    config: EpisodeConfig,
    x0: Vector3<f64>,
    initial: Stiffness,
    episode: Option<Episode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VicSnapshot {
    episode: Option<EpisodeState>,
}

impl VicEnv {
    /// Environment on `task`'s fixture displaced by `offset_mm`.
    pub fn new(task: &Task, model: &DmpModel, config: EpisodeConfig, offset_mm: f64) -> Result<Self> {
        config.validate()?;
        task.randomization.validate()?;
        let reference = Arc::new(Reference::from_model(model)?);
        Ok(Self {
            world: task.world_with_offset(offset_mm),
            task: task.clone(),
            reference,
            config,
            x0: model.x0.p,
            initial: *ImpedanceGains::middle().stiffness(),
            episode: None,
        })
    }

    /// Starting stiffness of every episode (mid-range unless changed).
    pub fn with_initial_stiffness(mut self, k: Stiffness) -> Result<Self> {
        ImpedanceGains::new(k.fixed_rows::<3>(0).into(), k.fixed_rows::<3>(3).into())?;
        self.initial = k;
        Ok(self)
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn reference(&self) -> &Arc<Reference> {
        &self.reference
    }

    pub fn episode(&self) -> Option<&Episode> {
        self.episode.as_ref()
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    /// Runs one episode requesting the same stiffness at every step.
    pub fn run_fixed(&mut self, k: &Stiffness, seed: u64) -> Result<EpisodeStats> {
        self.reset(seed)?;
        loop {
            let ep = self.episode.as_mut().expect("reset");
            let r = ep.step(k)?;
            if r.status.is_terminal() {
                return Ok(*ep.stats());
            }
        }
    }

    fn episode_mut(&mut self) -> Result<&mut Episode> {
        self.episode.as_mut().ok_or_else(|| Error::InvalidState("environment not reset".into()))
    }
}

impl Environment for VicEnv {
    fn obs_dim(&self) -> usize {
        OBS_DIM
    }

    fn act_dim(&self) -> usize {
        ACT_DIM
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perturbation = self.task.randomization.sample(&mut rng);
        let world = self.world.perturbed(&perturbation);
        let mut ep = Episode::reset(
            world,
            self.reference.clone(),
            self.config,
            self.task.predicate,
            self.task.randomization.force_noise_sd,
            rng.next_u64(),
        )?;
        ep.set_initial_stiffness(&self.initial)?;
        let obs = ep.observation();
        self.episode = Some(ep);
        Ok(obs)
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        let k = decode_action(action)?;
        let r = self.episode_mut()?.step(&k)?;
        Ok(Step {
            observation: r.observation,
            reward: r.reward,
            done: r.status.is_terminal(),
            success: r.status == EpisodeStatus::Finished,
        })
    }

    fn observation_scaling(&self) -> ObsScaling {
        let mut offset = vec![0.0; OBS_DIM];
        let mut scale = vec![1.0; OBS_DIM];
        for i in 0..3 {
            offset[i] = self.x0[i];
            scale[i] = 20.0;
        }
        for s in scale.iter_mut().skip(7) {
            *s = 0.1;
        }
        ObsScaling { offset, scale }
    }

    fn snapshot(&self) -> Result<serde_json::Value> {
        let snap = VicSnapshot { episode: self.episode.as_ref().map(|e| e.state().clone()) };
        Ok(serde_json::to_value(snap)?)
    }

    fn restore(&mut self, value: &serde_json::Value) -> Result<()> {
        let snap: VicSnapshot = serde_json::from_value(value.clone())?;
        self.episode = snap.episode.map(|s| Episode::restore(self.reference.clone(), s));
        Ok(())
    }
}
