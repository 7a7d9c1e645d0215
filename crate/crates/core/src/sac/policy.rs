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

//! Tanh-squashed diagonal Gaussian policy.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{shape, Cache, Float, Mlp, MlpParams};
use super::ObsScaling;
use crate::error::{invalid, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(1 − tanh²u)` without cancellation near saturation.
pub fn log_tanh_jacobian(u: f64) -> f64 {
    let softplus = |x: f64| if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Network emitting means (first half) and log standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor<T: Float> {
    pub net: Mlp<T>,
}

/// Batch forward pass kept for the reparameterized backward pass.
#[derive(Debug, Clone)]
pub struct ActorPass<T: Float> {
    pub action: DMatrix<T>,
    pub log_prob: DVector<T>,
    std: DMatrix<T>,
    eps: DMatrix<T>,
    clamped: DMatrix<bool>,
    cache: Cache<T>,
}

impl<T: Float> Actor<T> {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, rng: &mut R) -> Result<Self> {
        Ok(Self { net: Mlp::new(&shape(obs_dim, 2 * act_dim), rng)? })
    }

    pub fn from_net(net: Mlp<T>) -> Result<Self> {
        if !net.output_dim().is_multiple_of(2) {
            return Err(invalid("policy output must hold means and log-stds"));
        }
        Ok(Self { net })
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.net.output_dim() / 2
    }

    /// Means and clamped log-stds for one observation.
    pub fn distribution(&self, obs: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let out = self.net.forward(&DMatrix::from_column_slice(obs.len(), 1, obs))?;
        let n = self.act_dim();
        let lo = T::of(LOG_STD_MIN);
        let hi = T::of(LOG_STD_MAX);
        let mean = out.rows(0, n).iter().copied().collect();
        let log_std = out.rows(n, n).iter().map(|v| v.clamp(lo, hi)).collect();
        Ok((mean, log_std))
    }

    /// `tanh(mean)`: the noise-free action.
    pub fn deterministic(&self, obs: &[T]) -> Result<Vec<T>> {
        Ok(self.distribution(obs)?.0.into_iter().map(|m| m.tanh()).collect())
    }

    /// A squashed sample and its log-density.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[T], rng: &mut R) -> Result<(Vec<T>, f64)> {
        let (mean, log_std) = self.distribution(obs)?;
        let mut logp = 0.0;
        let mut a = Vec::with_capacity(mean.len());
        for (m, ls) in mean.iter().zip(&log_std) {
            let e: f64 = rng.sample(StandardNormal);
            let (m, ls) = (m.to_f64(), ls.to_f64());
            let u = m + ls.exp() * e;
            logp += -0.5 * e * e - ls - HALF_LN_2PI - log_tanh_jacobian(u);
            a.push(T::of(u.tanh()));
        }
        Ok((a, logp))
    }

    /// Reparameterized batch sample `tanh(μ + σ·eps)` with `eps` given.
    pub fn sample_batch(&self, obs: &DMatrix<T>, eps: &DMatrix<T>) -> Result<ActorPass<T>> {
        let n = self.act_dim();
        let b = obs.ncols();
        if eps.nrows() != n || eps.ncols() != b {
            return Err(invalid("noise shape does not match the batch"));
        }
        let (out, cache) = self.net.forward_cached(obs)?;
        let lo = T::of(LOG_STD_MIN);
        let hi = T::of(LOG_STD_MAX);
        let raw = out.rows(n, n);
        let clamped = DMatrix::from_fn(n, b, |i, j| raw[(i, j)] < lo || raw[(i, j)] > hi);
        let std = DMatrix::from_fn(n, b, |i, j| raw[(i, j)].clamp(lo, hi).exp());
        let mut action = DMatrix::zeros(n, b);
        let mut log_prob = DVector::zeros(b);
        for j in 0..b {
            let mut lp = 0.0;
            for i in 0..n {
                let e = eps[(i, j)].to_f64();
                let s = std[(i, j)].to_f64();
                let u = out[(i, j)].to_f64() + s * e;
                action[(i, j)] = T::of(u.tanh());
                lp += -0.5 * e * e - s.ln() - HALF_LN_2PI - log_tanh_jacobian(u);
            }
            log_prob[j] = T::of(lp);
        }
        Ok(ActorPass { action, log_prob, std, eps: eps.clone(), clamped, cache })
    }

    /// Parameter gradient of `Σ d_action ⊙ action + Σ d_log_prob ⊙ log_prob`.
    pub fn backward(&self, pass: &ActorPass<T>, d_action: &DMatrix<T>, d_log_prob: &DVector<T>) -> Mlp<T> {
        let n = self.act_dim();
        let b = pass.action.ncols();
        let two = T::of(2.0);
        let mut d_out = DMatrix::zeros(2 * n, b);
        for j in 0..b {
            for i in 0..n {
                let a = pass.action[(i, j)];
                let du = d_action[(i, j)] * (T::one() - a * a) + d_log_prob[j] * two * a;
                d_out[(i, j)] = du;
                d_out[(n + i, j)] = if pass.clamped[(i, j)] {
                    T::zero()
                } else {
                    du * pass.std[(i, j)] * pass.eps[(i, j)] - d_log_prob[j]
                };
            }
        }
        self.net.backward(&pass.cache, &d_out, false).0
    }
}

/// Standalone policy document: network plus observation normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub format: String,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub log_std_bounds: [f64; 2],
    pub scaling: ObsScaling,
    pub network: MlpParams,
}

pub const POLICY_FORMAT: &str = "vic-policy-1";

impl PolicyFile {
    pub fn new(actor: &Actor<f32>, scaling: ObsScaling) -> Self {
        Self {
            format: POLICY_FORMAT.into(),
            obs_dim: actor.obs_dim(),
            act_dim: actor.act_dim(),
            log_std_bounds: [LOG_STD_MIN, LOG_STD_MAX],
            scaling,
            network: actor.net.to_params_doc(),
        }
    }

    pub fn into_policy(self) -> Result<Policy> {
        if self.format != POLICY_FORMAT {
            return Err(invalid(format!("unsupported policy format '{}'", self.format)));
        }
        let actor = Actor::from_net(Mlp::<f32>::from_params_doc(&self.network)?)?;
        if actor.obs_dim() != self.obs_dim || actor.act_dim() != self.act_dim {
            return Err(invalid("policy dimensions do not match its network"));
        }
        if self.scaling.offset.len() != self.obs_dim || self.scaling.scale.len() != self.obs_dim {
            return Err(invalid("policy normalization does not match its input width"));
        }
        Ok(Policy { actor, scaling: self.scaling })
    }
}

/// Deployed policy acting on raw observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actor: Actor<f32>,
    pub scaling: ObsScaling,
}

impl Policy {
    pub fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x: Vec<f32> = self.scaling.apply(obs).into_iter().map(|v| v as f32).collect();
        Ok(self.actor.deterministic(&x)?.into_iter().map(f64::from).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobian_matches_direct_formula() {
        for u in [-3.0, -0.5, 0.0, 0.7, 2.0] {
            let t: f64 = f64::tanh(u);
            assert!((log_tanh_jacobian(u) - (1.0 - t * t).ln()).abs() < 1e-12);
        }
        assert!(log_tanh_jacobian(40.0).is_finite());
        assert!((log_tanh_jacobian(40.0) - (2.0 * std::f64::consts::LN_2 - 80.0)).abs() < 1e-9);
    }

    fn actor_with_heads(mean: f64, log_std: f64) -> Actor<f64> {
        let mut net = Mlp::<f64>::zeros(&[1, 2]).unwrap();
        net.layers[0].b[0] = mean;
        net.layers[0].b[1] = log_std;
        Actor::from_net(net).unwrap()
    }

    #[test]
    fn vanishing_noise_gives_tanh_of_mean() {
        let actor = actor_with_heads(0.4, -30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            let (a, lp) = actor.sample(&[0.0], &mut rng).unwrap();
            assert!((a[0] - 0.4f64.tanh()).abs() < 1e-6);
            assert!(lp.is_finite());
        }
        assert_eq!(actor.distribution(&[0.0]).unwrap().1[0], LOG_STD_MIN);
    }

    #[test]
    fn log_prob_is_the_squashed_density() {
        let actor = actor_with_heads(0.3, -0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = (-0.2f64).exp();
        for _ in 0..20 {
            let (a, lp) = actor.sample(&[0.0], &mut rng).unwrap();
            let u = a[0].atanh();
            let gauss = (-(u - 0.3).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            let density = gauss / (1.0 - a[0] * a[0]);
            assert!((lp - density.ln()).abs() < 1e-6, "{lp} vs {}", density.ln());
        }
    }

    #[test]
    fn huge_log_std_is_clamped() {
        let actor = actor_with_heads(0.0, 50.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, lp) = actor.sample(&[0.0], &mut rng).unwrap();
        assert!(a[0].abs() <= 1.0 && lp.is_finite());
    }

    #[test]
    fn policy_file_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let actor = Actor::<f32>::new(13, 6, &mut rng).unwrap();
        let file = PolicyFile::new(&actor, ObsScaling::identity(13));
        let text = serde_json::to_string(&file).unwrap();
        let back: PolicyFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.into_policy().unwrap().actor, actor);
    }
}
