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

//! Twin-critic soft actor-critic agent and its gradient update.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::buffer::Transition;
use super::mlp::{shape, Mlp, MlpParams};
use super::policy::Actor;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SacConfig {
    /// Entropy coefficient.
    pub alpha: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub gamma: f64,
    pub tau_soft: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub total_steps: u64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            lr_start: 3.3e-3,
            lr_end: 3e-4,
            gamma: 0.99,
            tau_soft: 0.005,
            batch_size: 256,
            buffer_capacity: 100_000,
            total_steps: 40_000,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0
            && self.alpha.is_finite()
            && self.gamma >= 0.0
            && self.gamma < 1.0
            && self.tau_soft > 0.0
            && self.tau_soft <= 1.0
            && self.lr_start > 0.0
            && self.lr_end > 0.0
            && self.lr_start.is_finite()
            && self.lr_end.is_finite()
            && self.batch_size > 0
            && self.buffer_capacity >= self.batch_size
            && self.total_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(invalid("invalid SAC configuration"))
        }
    }

    /// Learning rate after `step` environment steps, linear from start to end.
    pub fn learning_rate(&self, step: u64) -> f64 {
        let u = (step as f64 / self.total_steps as f64).min(1.0);
        self.lr_start + (self.lr_end - self.lr_start) * u
    }
}

/// A batch in column-per-sample layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub s: DMatrix<f32>,
    pub a: DMatrix<f32>,
    pub r: DVector<f32>,
    pub s_next: DMatrix<f32>,
    pub done: DVector<f32>,
}

impl Batch {
    pub fn from_transitions(ts: &[&Transition]) -> Result<Self> {
        let first = ts.first().ok_or_else(|| invalid("empty batch"))?;
        let (o, n, b) = (first.s.len(), first.a.len(), ts.len());
        if ts.iter().any(|t| t.s.len() != o || t.s_next.len() != o || t.a.len() != n) {
            return Err(invalid("ragged batch"));
        }
        Ok(Self {
            s: DMatrix::from_fn(o, b, |i, j| ts[j].s[i]),
            a: DMatrix::from_fn(n, b, |i, j| ts[j].a[i]),
            r: DVector::from_fn(b, |j, _| ts[j].r),
            s_next: DMatrix::from_fn(o, b, |i, j| ts[j].s_next[i]),
            done: DVector::from_fn(b, |j, _| if ts[j].done { 1.0 } else { 0.0 }),
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Scalars reported by one update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub mean_q: f64,
    pub mean_log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sac {
    pub actor: Actor<f32>,
    pub critics: [Mlp<f32>; 2],
    pub targets: [Mlp<f32>; 2],
    pub actor_opt: Adam<f32>,
    pub critic_opts: [Adam<f32>; 2],
    pub updates: u64,
}

fn stack(s: &DMatrix<f32>, a: &DMatrix<f32>) -> DMatrix<f32> {
    let mut x = DMatrix::zeros(s.nrows() + a.nrows(), s.ncols());
    x.rows_mut(0, s.nrows()).copy_from(s);
    x.rows_mut(s.nrows(), a.nrows()).copy_from(a);
    x
}

fn noise<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f32> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f32, _>(StandardNormal))
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::TrainingDivergence(format!("non-finite {what}")))
    }
}

impl Sac {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, rng: &mut R) -> Result<Self> {
        let actor = Actor::new(obs_dim, act_dim, rng)?;
        let q1 = Mlp::new(&shape(obs_dim + act_dim, 1), rng)?;
        let q2 = Mlp::new(&shape(obs_dim + act_dim, 1), rng)?;
        Ok(Self {
            actor_opt: Adam::new(&actor.net),
            critic_opts: [Adam::new(&q1), Adam::new(&q2)],
            targets: [q1.clone(), q2.clone()],
            critics: [q1, q2],
            actor,
            updates: 0,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.obs_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.act_dim()
    }

    /// Critic values `Q_i(s, a)` for a batch.
    pub fn q_values(&self, i: usize, s: &DMatrix<f32>, a: &DMatrix<f32>) -> Result<DVector<f32>> {
        let q = self.critics[i].forward(&stack(s, a))?;
        Ok(q.row(0).transpose())
    }

    /// One critic step, one actor step, then target smoothing.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        batch: &Batch,
        cfg: &SacConfig,
        lr: f64,
        rng: &mut R,
    ) -> Result<UpdateStats> {
        let b = batch.len();
        let n = self.act_dim();
        let inv_b = 1.0 / b as f32;
        let alpha = cfg.alpha as f32;

        // soft Bellman targets from the target critics
        let next = self.actor.sample_batch(&batch.s_next, &noise(n, b, rng))?;
        let x_next = stack(&batch.s_next, &next.action);
        let t1 = self.targets[0].forward(&x_next)?;
        let t2 = self.targets[1].forward(&x_next)?;
        let gamma = cfg.gamma as f32;
        let y = DVector::from_fn(b, |j, _| {
            let soft = t1[(0, j)].min(t2[(0, j)]) - alpha * next.log_prob[j];
            batch.r[j] + gamma * (1.0 - batch.done[j]) * soft
        });

        let x = stack(&batch.s, &batch.a);
        let mut critic_loss = 0.0;
        let mut mean_q = 0.0;
        for i in 0..2 {
            let (q, cache) = self.critics[i].forward_cached(&x)?;
            let diff = DMatrix::from_fn(1, b, |_, j| q[(0, j)] - y[j]);
            critic_loss += 0.5 * diff.iter().map(|d| (*d as f64).powi(2)).sum::<f64>() / b as f64;
            mean_q += q.iter().map(|v| *v as f64).sum::<f64>() / (2 * b) as f64;
            let (grads, _) = self.critics[i].backward(&cache, &(diff * inv_b), false);
            self.critic_opts[i].step(&mut self.critics[i], &grads, lr);
        }
        finite(critic_loss, "critic loss")?;

        // reparameterized actor step against the smaller critic
        let pass = self.actor.sample_batch(&batch.s, &noise(n, b, rng))?;
        let x_pi = stack(&batch.s, &pass.action);
        let (q1, c1) = self.critics[0].forward_cached(&x_pi)?;
        let (q2, c2) = self.critics[1].forward_cached(&x_pi)?;
        let mut d1 = DMatrix::zeros(1, b);
        let mut d2 = DMatrix::zeros(1, b);
        let mut actor_loss = 0.0;
        for j in 0..b {
            let (qmin, d) = if q1[(0, j)] <= q2[(0, j)] { (q1[(0, j)], &mut d1) } else { (q2[(0, j)], &mut d2) };
            d[(0, j)] = -inv_b;
            actor_loss += (alpha * pass.log_prob[j] - qmin) as f64 / b as f64;
        }
        finite(actor_loss, "actor loss")?;
        let o = self.obs_dim();
        let g = self.critics[0].input_gradient(&c1, &d1) + self.critics[1].input_gradient(&c2, &d2);
        let d_action = g.rows(o, n).into_owned();
        let d_log_prob = DVector::from_element(b, alpha * inv_b);
        let grads = self.actor.backward(&pass, &d_action, &d_log_prob);
        self.actor_opt.step(&mut self.actor.net, &grads, lr);

        let tau = cfg.tau_soft as f32;
        for i in 0..2 {
            self.targets[i].soft_update(&self.critics[i], tau);
        }
        self.updates += 1;
        if !(self.actor.net.is_finite() && self.critics.iter().all(|c| c.is_finite())) {
            return Err(Error::TrainingDivergence("non-finite network parameters".into()));
        }
        let mean_log_prob = pass.log_prob.iter().map(|v| *v as f64).sum::<f64>() / b as f64;
        Ok(UpdateStats { critic_loss, actor_loss, mean_q, mean_log_prob })
    }

    pub fn to_doc(&self) -> SacDoc {
        let adam = |a: &Adam<f32>| AdamDoc { m: a.m.to_params_doc(), v: a.v.to_params_doc(), t: a.t };
        SacDoc {
            actor: self.actor.net.to_params_doc(),
            critics: [self.critics[0].to_params_doc(), self.critics[1].to_params_doc()],
            targets: [self.targets[0].to_params_doc(), self.targets[1].to_params_doc()],
            actor_opt: adam(&self.actor_opt),
            critic_opts: [adam(&self.critic_opts[0]), adam(&self.critic_opts[1])],
            updates: self.updates,
        }
    }

    pub fn from_doc(doc: &SacDoc) -> Result<Self> {
        let net = |p: &MlpParams| Mlp::<f32>::from_params_doc(p);
        let adam = |a: &AdamDoc| -> Result<Adam<f32>> { Ok(Adam { m: net(&a.m)?, v: net(&a.v)?, t: a.t }) };
        Ok(Self {
            actor: Actor::from_net(net(&doc.actor)?)?,
            critics: [net(&doc.critics[0])?, net(&doc.critics[1])?],
            targets: [net(&doc.targets[0])?, net(&doc.targets[1])?],
            actor_opt: adam(&doc.actor_opt)?,
            critic_opts: [adam(&doc.critic_opts[0])?, adam(&doc.critic_opts[1])?],
            updates: doc.updates,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamDoc {
    pub m: MlpParams,
    pub v: MlpParams,
    pub t: u64,
}

/// Text form of every network and optimizer moment in the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SacDoc {
    pub actor: MlpParams,
    pub critics: [MlpParams; 2],
    pub targets: [MlpParams; 2],
    pub actor_opt: AdamDoc,
    pub critic_opts: [AdamDoc; 2],
    pub updates: u64,
}
