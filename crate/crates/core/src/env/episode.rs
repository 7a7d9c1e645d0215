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

//! Episode state machine: DMP reference, admittance controller and contact
//! world advanced together at the controller rate.

use std::sync::Arc;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::demo::CONTROL_DT;
use super::task::Predicate;
use super::world::ContactWorld;
use crate::admittance::{self, AdmittanceState, ImpedanceGains, Pose, Stiffness, Wrench};
use crate::dmp::{rollout, DmpModel, RolloutSample};
use crate::error::{invalid, Error, Result};
use crate::sac::reward::{reward, EpisodeStatus, Thresholds, TrackingError};

/// Observation length: position (3), quaternion `w, x, y, z` (4), wrench (6).
pub const OBS_DIM: usize = 13;
pub const ACT_DIM: usize = 6;
/// Commanded acceleration above which the robot is considered faulted.
pub const MAX_ACCELERATION: f64 = 1e4;
/// Desired-force magnitude that marks a tick as part of the contact phase.
pub const CONTACT_PHASE_FORCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeConfig {
    pub e_term: Thresholds,
    /// Time between policy actions (s).
    pub policy_period: f64,
    /// Upper bound on policy steps per episode.
    pub max_steps: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { e_term: Thresholds::default(), policy_period: 0.05, max_steps: 100_000 }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        self.e_term.validate()?;
        if !(self.policy_period >= CONTROL_DT) || !self.policy_period.is_finite() || self.max_steps == 0 {
            return Err(invalid("policy period must be at least one controller tick and max_steps positive"));
        }
        Ok(())
    }

    pub fn ticks_per_step(&self) -> usize {
        ((self.policy_period / CONTROL_DT).round() as usize).max(1)
    }
}

/// DMP rollout at the controller rate, with reference velocities.
#[derive(Debug, Clone)]
pub struct Reference {
    samples: Vec<RolloutSample>,
    velocity: Vec<Vector3<f64>>,
}

impl Reference {
    pub fn from_model(model: &DmpModel) -> Result<Self> {
        Self::new(rollout(model, CONTROL_DT, model.config.duration)?)
    }

    pub fn new(samples: Vec<RolloutSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("reference needs at least two samples"));
        }
        let n = samples.len();
        let velocity = (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                (samples[b].pose.p - samples[a].pose.p) / ((b - a) as f64 * CONTROL_DT)
            })
            .collect();
        Ok(Self { samples, velocity })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last_tick(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn sample(&self, tick: usize) -> &RolloutSample {
        &self.samples[tick.min(self.last_tick())]
    }

    pub fn velocity(&self, tick: usize) -> Vector3<f64> {
        self.velocity[tick.min(self.last_tick())]
    }

    pub fn duration(&self) -> f64 {
        self.last_tick() as f64 * CONTROL_DT
    }
}

/// What the F/T sensor and joint encoders report at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub pose: Pose,
    pub velocity: Vector3<f64>,
    pub wrench: Wrench,
}

/// Running totals used by task predicates and summaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub contact_phase_ticks: usize,
    pub contact_ticks: usize,
    /// Largest TCP `y` in fixture coordinates.
    pub max_y: f64,
    /// Final TCP position in fixture coordinates.
    pub final_position: Vector3<f64>,
    pub peak_force: f64,
    pub peak_force_error: f64,
    pub return_sum: f64,
    pub steps: usize,
}

impl EpisodeStats {
    /// Share of contact-phase ticks spent touching the task surface.
    pub fn coverage(&self) -> f64 {
        if self.contact_phase_ticks == 0 {
            1.0
        } else {
            self.contact_ticks as f64 / self.contact_phase_ticks as f64
        }
    }
}

/// Outcome of one policy step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub status: EpisodeStatus,
}

/// Serializable state of an [`Episode`]; the reference is rebuilt from the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub world: ContactWorld,
    pub config: EpisodeConfig,
    pub predicate: Predicate,
    pub gains: ImpedanceGains,
    pub controller: AdmittanceState,
    pub tick: usize,
    pub status: EpisodeStatus,
    pub current: Measurement,
    pub stats: EpisodeStats,
    pub force_noise_sd: f64,
    pub noise: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct Episode {
    reference: Arc<Reference>,
    st: EpisodeState,
}

impl Episode {
    /// Starts an episode at the reference start with mid-range gains.
    pub fn reset(
        world: ContactWorld,
        reference: Arc<Reference>,
        config: EpisodeConfig,
        predicate: Predicate,
        force_noise_sd: f64,
        noise_seed: u64,
    ) -> Result<Self> {
        world.validate()?;
        config.validate()?;
        if !(force_noise_sd >= 0.0) {
            return Err(invalid("force noise must be non-negative"));
        }
        let start = reference.sample(0).pose;
        let mut st = EpisodeState {
            world,
            config,
            predicate,
            gains: ImpedanceGains::middle(),
            controller: AdmittanceState::default(),
            tick: 0,
            status: EpisodeStatus::Running,
            current: Measurement { pose: start, velocity: Vector3::zeros(), wrench: Wrench::zero() },
            stats: EpisodeStats { max_y: f64::NEG_INFINITY, ..Default::default() },
            force_noise_sd,
            noise: ChaCha8Rng::seed_from_u64(noise_seed),
        };
        st.current = measure(&mut st, &reference);
        let mut ep = Self { reference, st };
        ep.observe_stats();
        Ok(ep)
    }

    /// Replaces the starting stiffness; only valid before the first step.
    pub fn set_initial_stiffness(&mut self, k: &Stiffness) -> Result<()> {
        if self.st.stats.steps > 0 {
            return Err(Error::InvalidState("stiffness can only be preset before the first step".into()));
        }
        self.st.gains.set_stiffness(*k)
    }

    pub fn restore(reference: Arc<Reference>, state: EpisodeState) -> Self {
        Self { reference, st: state }
    }

    pub fn state(&self) -> &EpisodeState {
        &self.st
    }

    pub fn status(&self) -> EpisodeStatus {
        self.st.status
    }

    pub fn stats(&self) -> &EpisodeStats {
        &self.st.stats
    }

    pub fn time(&self) -> f64 {
        self.st.tick as f64 * CONTROL_DT
    }

    pub fn measurement(&self) -> &Measurement {
        &self.st.current
    }

    pub fn reference_sample(&self) -> &RolloutSample {
        self.reference.sample(self.st.tick)
    }

    pub fn stiffness(&self) -> &Stiffness {
        self.st.gains.stiffness()
    }

    pub fn world(&self) -> &ContactWorld {
        &self.st.world
    }

    pub fn observation(&self) -> Vec<f64> {
        let m = &self.st.current;
        let mut o = Vec::with_capacity(OBS_DIM);
        o.extend(m.pose.p.iter());
        o.extend(m.pose.q.wxyz());
        o.extend(m.wrench.to_array());
        o
    }

    pub fn tracking_error(&self) -> TrackingError {
        let r = self.reference_sample();
        TrackingError::between(&self.st.current.pose, &self.st.current.wrench, &r.pose, &r.wrench)
    }

    /// Whether the task predicate holds for the run so far.
    pub fn task_success(&self) -> bool {
        self.st.predicate.holds(&self.st.stats)
    }

    /// Applies a requested stiffness (through [`admittance::clamp_gains`]) and
    /// advances one policy period.
    pub fn step(&mut self, requested: &Stiffness) -> Result<StepResult> {
        if self.st.status.is_terminal() {
            return Err(Error::InvalidState(format!("episode already {}", self.st.status)));
        }
        if self.st.stats.steps >= self.st.config.max_steps {
            return Err(Error::InvalidState("episode step budget exhausted".into()));
        }
        if requested.iter().any(|k| !k.is_finite()) {
            return Err(invalid("non-finite stiffness request"));
        }
        let k = admittance::clamp_gains(self.st.gains.stiffness(), requested);
        self.st.gains.set_stiffness(k)?;

        for _ in 0..self.st.config.ticks_per_step() {
            if !self.tick() {
                break;
            }
        }
        if self.st.status == EpisodeStatus::Running && self.st.tick >= self.reference.last_tick() {
            self.st.status = if self.task_success() { EpisodeStatus::Finished } else { EpisodeStatus::Terminated };
        }
        self.st.stats.steps += 1;
        if self.st.status == EpisodeStatus::Running && self.st.stats.steps >= self.st.config.max_steps {
            self.st.status = EpisodeStatus::Terminated;
        }
        let r = reward(&self.tracking_error(), &self.st.config.e_term, self.st.status);
        self.st.stats.return_sum += r;
        Ok(StepResult { observation: self.observation(), reward: r, status: self.st.status })
    }

    /// One controller tick; returns false once the episode stops running.
    fn tick(&mut self) -> bool {
        if self.tracking_error().exceeds(&self.st.config.e_term) {
            self.st.status = EpisodeStatus::Terminated;
            return false;
        }
        if self.st.tick >= self.reference.last_tick() {
            return false;
        }
        let f_d = self.reference.sample(self.st.tick).wrench;
        let before = self.st.current.velocity;
        let next = admittance::step(&self.st.controller, &self.st.gains, &self.st.current.wrench, &f_d, CONTROL_DT);
        match next {
            Ok(s) if s.is_finite() => self.st.controller = s,
            _ => {
                self.st.status = EpisodeStatus::Error;
                return false;
            }
        }
        self.st.tick += 1;
        self.st.current = measure(&mut self.st, &self.reference);
        let accel = (self.st.current.velocity - before).norm() / CONTROL_DT;
        if !(accel <= MAX_ACCELERATION) || !self.st.current.pose.is_finite() || !self.st.current.wrench.is_finite() {
            self.st.status = EpisodeStatus::Error;
            return false;
        }
        self.observe_stats();
        true
    }

    fn observe_stats(&mut self) {
        let st = &mut self.st;
        let r = self.reference.sample(st.tick);
        let local = st.current.pose.p - st.world.offset;
        let s = &mut st.stats;
        if r.wrench.f.norm() >= CONTACT_PHASE_FORCE {
            s.contact_phase_ticks += 1;
            if st.world.touches_task_surface(&st.current.pose.p) {
                s.contact_ticks += 1;
            }
        }
        s.max_y = s.max_y.max(local.y);
        s.final_position = local;
        s.peak_force = s.peak_force.max(st.current.wrench.f.norm());
        s.peak_force_error = s.peak_force_error.max((st.current.wrench.f - r.wrench.f).norm());
    }
}

fn measure(st: &mut EpisodeState, reference: &Reference) -> Measurement {
    let r = reference.sample(st.tick);
    let pose = admittance::commanded_pose(&r.pose, &st.controller);
    let velocity = reference.velocity(st.tick) + r.pose.q.rotate(&st.controller.v_e);
    let mut wrench = st.world.contact_wrench(&pose, &velocity);
    if st.force_noise_sd > 0.0 {
        let n = Normal::new(0.0, st.force_noise_sd).expect("validated deviation");
        for i in 0..3 {
            wrench.f[i] += n.sample(&mut st.noise);
        }
    }
    Measurement { pose, velocity, wrench }
}
