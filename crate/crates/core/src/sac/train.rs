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

//! Resumable SAC training loop with periodic deterministic evaluation.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{Batch, Sac, SacConfig, SacDoc, UpdateStats};
use super::buffer::{ReplayBuffer, Transition};
use super::policy::{Policy, PolicyFile};
use super::{Environment, ObsScaling};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub sac: SacConfig,
    /// Uniformly random actions, and no updates, before this many steps.
    pub learning_starts: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Evaluation episode `i` always uses seed `eval_seed + i`.
    pub eval_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sac: SacConfig::default(),
            learning_starts: 100,
            eval_every: 2000,
            eval_episodes: 5,
            eval_seed: 1_000_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.sac.validate()?;
        if self.eval_every == 0 || self.eval_episodes == 0 {
            return Err(invalid("evaluation period and episode count must be positive"));
        }
        Ok(())
    }
}

/// One learning-curve row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub mean_return: f64,
    pub success_rate: f64,
}

/// Everything needed to continue a run bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub seed: u64,
    pub config: TrainConfig,
    pub step: u64,
    pub episodes: u64,
    pub agent: SacDoc,
    pub buffer: ReplayBuffer,
    pub rng: ChaCha8Rng,
    pub observation: Option<Vec<f64>>,
    pub env: serde_json::Value,
    pub scaling: ObsScaling,
    pub curve: Vec<CurvePoint>,
}

pub const CHECKPOINT_FORMAT: &str = "vic-checkpoint-1";

pub struct Trainer<E: Environment> {
    env: E,
    eval_env: E,
    config: TrainConfig,
    seed: u64,
    agent: Sac,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    step: u64,
    episodes: u64,
    observation: Option<Vec<f64>>,
    scaling: ObsScaling,
    curve: Vec<CurvePoint>,
    last_update: Option<UpdateStats>,
}

fn to_f32(x: &[f64]) -> Vec<f32> {
    x.iter().map(|v| *v as f32).collect()
}

impl<E: Environment> Trainer<E> {
    /// Fresh run; `eval_env` must describe the same task as `env`.
    pub fn new(env: E, eval_env: E, config: TrainConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if env.obs_dim() != eval_env.obs_dim() || env.act_dim() != eval_env.act_dim() {
            return Err(invalid("training and evaluation environments differ"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = Sac::new(env.obs_dim(), env.act_dim(), &mut rng)?;
        Ok(Self {
            scaling: env.observation_scaling(),
            buffer: ReplayBuffer::new(config.sac.buffer_capacity)?,
            env,
            eval_env,
            config,
            seed,
            agent,
            rng,
            step: 0,
            episodes: 0,
            observation: None,
            curve: Vec::new(),
            last_update: None,
        })
    }

    pub fn resume(mut env: E, eval_env: E, ck: Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(invalid(format!("unsupported checkpoint format '{}'", ck.format)));
        }
        ck.config.validate()?;
        env.restore(&ck.env)?;
        let agent = Sac::from_doc(&ck.agent)?;
        if agent.obs_dim() != env.obs_dim() || agent.act_dim() != env.act_dim() {
            return Err(invalid("checkpoint does not match the environment"));
        }
        Ok(Self {
            env,
            eval_env,
            config: ck.config,
            seed: ck.seed,
            agent,
            buffer: ck.buffer,
            rng: ck.rng,
            step: ck.step,
            episodes: ck.episodes,
            observation: ck.observation,
            scaling: ck.scaling,
            curve: ck.curve,
            last_update: None,
        })
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        Ok(Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            seed: self.seed,
            config: self.config,
            step: self.step,
            episodes: self.episodes,
            agent: self.agent.to_doc(),
            buffer: self.buffer.clone(),
            rng: self.rng.clone(),
            observation: self.observation.clone(),
            env: self.env.snapshot()?,
            scaling: self.scaling.clone(),
            curve: self.curve.clone(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn curve(&self) -> &[CurvePoint] {
        &self.curve
    }

    pub fn agent(&self) -> &Sac {
        &self.agent
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn last_update(&self) -> Option<&UpdateStats> {
        self.last_update.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.config.sac.total_steps
    }

    pub fn policy_file(&self) -> PolicyFile {
        PolicyFile::new(&self.agent.actor, self.scaling.clone())
    }

    pub fn policy(&self) -> Policy {
        Policy { actor: self.agent.actor.clone(), scaling: self.scaling.clone() }
    }

    /// One environment step, one gradient update, and an evaluation when due.
    /// Returns the new curve row if one was produced.
    pub fn step(&mut self) -> Result<Option<CurvePoint>> {
        let obs = match self.observation.take() {
            Some(o) => o,
            None => {
                let seed = self.rng.next_u64();
                self.env.reset(seed)?
            }
        };
        let s = to_f32(&self.scaling.apply(&obs));
        let action: Vec<f32> = if self.step < self.config.learning_starts {
            (0..self.env.act_dim()).map(|_| self.rng.random_range(-1.0f32..=1.0)).collect()
        } else {
            self.agent.actor.sample(&s, &mut self.rng)?.0
        };
        let out = self.env.step(&action.iter().map(|a| *a as f64).collect::<Vec<_>>())?;
        self.buffer.push(Transition {
            s,
            a: action,
            r: out.reward as f32,
            s_next: to_f32(&self.scaling.apply(&out.observation)),
            done: out.done,
        })?;
        if out.done {
            self.episodes += 1;
        } else {
            self.observation = Some(out.observation);
        }
        self.step += 1;

        let batch_size = self.config.sac.batch_size;
        if self.step >= self.config.learning_starts && self.buffer.len() >= batch_size {
            let batch = Batch::from_transitions(&self.buffer.sample(batch_size, &mut self.rng)?)?;
            let lr = self.config.sac.learning_rate(self.step);
            self.last_update = Some(self.agent.update(&batch, &self.config.sac, lr, &mut self.rng)?);
        }
        if self.step.is_multiple_of(self.config.eval_every) {
            let point = self.evaluate()?;
            self.curve.push(point);
            return Ok(Some(point));
        }
        Ok(None)
    }

    /// Steps until `total_steps`, calling `on_eval` after each evaluation;
    /// returning `false` from it stops early (e.g. to checkpoint).
    pub fn run(&mut self, mut on_eval: impl FnMut(&Self, &CurvePoint) -> bool) -> Result<()> {
        while !self.is_done() {
            if let Some(p) = self.step()? {
                if !on_eval(self, &p) {
                    break;
                }
            }
        }
        Ok(())
    }

    /// Deterministic-policy episodes on the fixed evaluation seeds.
    pub fn evaluate(&mut self) -> Result<CurvePoint> {
        let policy = self.policy();
        let (ret, wins) = run_policy(&mut self.eval_env, &policy, self.config.eval_seed, self.config.eval_episodes)?;
        let n = self.config.eval_episodes as f64;
        Ok(CurvePoint { step: self.step, mean_return: ret / n, success_rate: wins as f64 / n })
    }
}

/// Total return and success count of `episodes` deterministic runs on seeds
/// `seed, seed + 1, …`.
pub fn run_policy<E: Environment>(env: &mut E, policy: &Policy, seed: u64, episodes: usize) -> Result<(f64, usize)> {
    let mut total = 0.0;
    let mut wins = 0;
    for i in 0..episodes {
        let mut obs = env.reset(seed.wrapping_add(i as u64))?;
        loop {
            let out = env.step(&policy.act(&obs)?)?;
            total += out.reward;
            if out.done {
                wins += usize::from(out.success);
                break;
            }
            obs = out.observation;
        }
    }
    Ok((total, wins))
}
