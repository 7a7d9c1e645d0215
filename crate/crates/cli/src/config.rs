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

//! Run configuration file (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use vic_core::admittance::{ImpedanceGains, Stiffness};
use vic_core::dmp::DmpConfig;
use vic_core::env::{EpisodeConfig, Task, TaskKind};
use vic_core::sac::train::TrainConfig;

use crate::CliError;

/// Fixed-stiffness condition; gains outside the controller limits are
/// saturated to them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub name: String,
    pub k_p: f64,
    pub k_o: f64,
}

impl Condition {
    pub fn stiffness(&self) -> Stiffness {
        let (p, o) = (self.k_p, self.k_o);
        *ImpedanceGains::saturating(Stiffness::new(p, p, p, o, o, o)).stiffness()
    }
}

fn default_conditions() -> Vec<Condition> {
    [("low", 50.0, 0.5), ("middle", 605.0, 13.0), ("high", 2000.0, 40.0)]
        .into_iter()
        .map(|(name, k_p, k_o)| Condition { name: name.into(), k_p, k_o })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default = "default_conditions")]
    pub conditions: Vec<Condition>,
    /// Also evaluate the trained policy.
    #[serde(default)]
    pub policy: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Fixture offsets in millimetres; one table block per offset.
    #[serde(default = "default_offsets")]
    pub offsets: Vec<f64>,
}

fn default_trials() -> usize {
    100
}

fn default_offsets() -> Vec<f64> {
    vec![0.0]
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { conditions: default_conditions(), policy: false, trials: default_trials(), offsets: default_offsets() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpSection {
    #[serde(default = "default_bfs")]
    pub n_basis: usize,
}

fn default_bfs() -> usize {
    1000
}

impl Default for DmpSection {
    fn default() -> Self {
        Self { n_basis: default_bfs() }
    }
}

/// Contact parameter overrides for the task preset.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    pub k_env: Option<f64>,
    pub d_env: Option<f64>,
    pub force_noise_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    task: String,
    out: Option<PathBuf>,
    demo: Option<PathBuf>,
    model: Option<PathBuf>,
    policy: Option<PathBuf>,
    #[serde(default)]
    world: WorldSection,
    #[serde(default)]
    dmp: DmpSection,
    /// Gains for `rollout` without a policy.
    gains: Option<Condition>,
    #[serde(default)]
    episode: EpisodeConfig,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default)]
    eval: EvalSection,
}

/// A loaded configuration with every path made absolute.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub task: Task,
    /// Output directory; also holds inputs that are not named explicitly.
    pub out: PathBuf,
    pub demo: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub dmp: DmpConfig,
    pub gains: Condition,
    pub episode: EpisodeConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message())))
    }

    /// Parses `text`; relative paths are taken from `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::usage(e.to_string()))?;
        let kind: TaskKind = raw.task.parse().map_err(|e: vic_core::Error| CliError::usage(e.to_string()))?;
        let mut task = Task::preset(kind);
        if let Some(k) = raw.world.k_env {
            task.world.k_env = k;
        }
        if let Some(d) = raw.world.d_env {
            task.world.d_env = d;
        }
        if let Some(sd) = raw.world.force_noise_sd {
            task.randomization.force_noise_sd = sd;
        }
        task.world.validate().map_err(CliError::usage_from)?;
        task.randomization.validate().map_err(CliError::usage_from)?;

        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let out = resolve(raw.out.as_deref().unwrap_or(Path::new("out")));

        let dmp = DmpConfig::new(raw.dmp.n_basis);
        dmp.validate().map_err(CliError::usage_from)?;
        raw.episode.validate().map_err(CliError::usage_from)?;
        raw.train.validate().map_err(CliError::usage_from)?;
        if raw.eval.trials == 0 {
            return Err(CliError::usage("eval.trials must be positive"));
        }
        if raw.eval.offsets.iter().any(|o| !o.is_finite()) {
            return Err(CliError::usage("eval.offsets must be finite"));
        }
        let gains = raw.gains.unwrap_or(Condition { name: "middle".into(), k_p: 605.0, k_o: 13.0 });
        if !(gains.k_p > 0.0 && gains.k_o > 0.0) {
            return Err(CliError::usage("gains must be positive"));
        }
        Ok(Self {
            seed: raw.seed,
            task,
            demo: raw.demo.as_deref().map(resolve),
            model: raw.model.as_deref().map(resolve),
            policy: raw.policy.as_deref().map(resolve),
            out,
            dmp,
            gains,
            episode: raw.episode,
            train: raw.train,
            eval: raw.eval,
        })
    }
}

impl RunConfig {
    pub fn demo_path(&self) -> PathBuf {
        self.demo.clone().unwrap_or_else(|| self.out.join("demo.csv"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.json"))
    }

    pub fn policy_path(&self) -> PathBuf {
        self.policy.clone().unwrap_or_else(|| self.out.join("policy.json"))
    }
}
