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

//! Subcommand implementations.

use std::fs;
use std::path::Path;

use vic_core::admittance::Stiffness;
use vic_core::dmp::{self, Demonstration, DmpConfig, DmpModel, RolloutSample};
use vic_core::env::{encode_stiffness, synth_demonstration, VicEnv};
use vic_core::io::{self, TraceRow};
use vic_core::sac::policy::{Policy, PolicyFile};
use vic_core::sac::reward::EpisodeStatus;
use vic_core::sac::train::{Checkpoint, Trainer};
use vic_core::sac::Environment;

use crate::config::RunConfig;
use crate::{CliError, Common};

/// Loads the configuration and applies the command-line overrides.
fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::usage(format!("{}: {e}", cfg.out.display())))?;
    Ok(cfg)
}

fn read_demo(path: &Path) -> Result<Demonstration, CliError> {
    Ok(io::read_demonstration(io::open(path)?)?)
}

fn read_model(path: &Path) -> Result<DmpModel, CliError> {
    let model: DmpModel = io::read_json(io::open(path)?)?;
    model.validate()?;
    Ok(model)
}

fn read_policy(path: &Path) -> Result<Policy, CliError> {
    let file: PolicyFile = io::read_json(io::open(path)?)?;
    Ok(file.into_policy()?)
}

pub fn demo(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let demo = synth_demonstration(&cfg.task.world, &cfg.task.script)?;
    let path = cfg.out.join("demo.csv");
    io::save(&path, |w| io::write_demonstration(w, &demo))?;
    let peak = demo.samples().iter().map(|s| s.wrench.f.norm()).fold(0.0, f64::max);
    println!("wrote {}: {} samples, peak |F| {:.3} N", path.display(), demo.len(), peak);
    Ok(())
}

/// Per-channel root-mean-square reconstruction error of a fitted model.
struct Reconstruction {
    position: [f64; 3],
    range: [f64; 3],
    orientation: f64,
    force: [f64; 3],
}

fn reconstruction(demo: &Demonstration, model: &DmpModel) -> Result<Reconstruction, CliError> {
    let out: Vec<RolloutSample> = dmp::rollout(model, demo.dt(), demo.duration())?;
    let n = demo.len().min(out.len());
    let mut p = [0.0; 3];
    let mut f = [0.0; 3];
    let mut o = 0.0;
    for (a, b) in out.iter().zip(demo.samples()).take(n) {
        for i in 0..3 {
            p[i] += (a.pose.p[i] - b.pose.p[i]).powi(2);
            f[i] += (a.wrench.f[i] - b.wrench.f[i]).powi(2);
        }
        o += vic_core::quat::orientation_error(&a.pose.q, &b.pose.q).powi(2);
    }
    let rms = |x: f64| (x / n as f64).sqrt();
    let range = demo.position_range();
    Ok(Reconstruction {
        position: p.map(rms),
        range: [range.x, range.y, range.z],
        orientation: rms(o),
        force: f.map(rms),
    })
}

pub fn fit(common: &Common, bfs: Option<usize>) -> Result<(), CliError> {
    let cfg = load(common)?;
    let config = match bfs {
        Some(n) => {
            let c = DmpConfig::new(n);
            c.validate().map_err(CliError::usage_from)?;
            c
        }
        None => cfg.dmp,
    };
    let demo = read_demo(&cfg.demo_path())?;
    let model = dmp::fit(&demo, &config)?;
    let path = cfg.out.join("model.json");
    io::save(&path, |w| io::write_json(w, &model))?;
    let r = reconstruction(&demo, &model)?;
    println!("wrote {} ({} basis functions)", path.display(), config.n_basis);
    for (i, axis) in ["x", "y", "z"].iter().enumerate() {
        let pct = if r.range[i] > 0.0 { 100.0 * r.position[i] / r.range[i] } else { 0.0 };
        println!("position {axis} rmse {:.6e} m ({pct:.4}% of range)", r.position[i]);
    }
    println!("orientation rmse {:.6e} rad", r.orientation);
    for (i, axis) in ["x", "y", "z"].iter().enumerate() {
        println!("force {axis} rmse {:.6e} N", r.force[i]);
    }
    Ok(())
}

/// Where the stiffness comes from during an episode.
enum Controller<'a> {
    Fixed(Stiffness),
    Learned(&'a Policy),
}

impl Controller<'_> {
    fn action(&self, obs: &[f64]) -> Result<Vec<f64>, CliError> {
        match self {
            Controller::Fixed(k) => Ok(encode_stiffness(k)),
            Controller::Learned(p) => Ok(p.act(obs)?),
        }
    }
}

fn environment(cfg: &RunConfig, model: &DmpModel, offset: f64, controller: &Controller) -> Result<VicEnv, CliError> {
    let env = VicEnv::new(&cfg.task, model, cfg.episode, offset)?;
    Ok(match controller {
        Controller::Fixed(k) => env.with_initial_stiffness(*k)?,
        Controller::Learned(_) => env,
    })
}

/// Runs one episode; returns the trace (with the initial state as row 0).
fn episode(env: &mut VicEnv, controller: &Controller, seed: u64) -> Result<Vec<TraceRow>, CliError> {
    let mut obs = env.reset(seed)?;
    let mut rows = vec![TraceRow::capture(env.episode().expect("reset"), 0.0)];
    loop {
        let out = env.step(&controller.action(&obs)?)?;
        rows.push(TraceRow::capture(env.episode().expect("reset"), out.reward));
        if out.done {
            return Ok(rows);
        }
        obs = out.observation;
    }
}

pub fn rollout(common: &Common, offset: f64, policy: Option<&Path>) -> Result<(), CliError> {
    let cfg = load(common)?;
    let model = read_model(&cfg.model_path())?;
    let loaded = policy.map(read_policy).transpose()?;
    let controller = match &loaded {
        Some(p) => Controller::Learned(p),
        None => Controller::Fixed(cfg.gains.stiffness()),
    };
    let mut env = environment(&cfg, &model, offset, &controller)?;
    let rows = episode(&mut env, &controller, cfg.seed)?;
    let path = cfg.out.join("trace.csv");
    io::save(&path, |w| io::write_trace(w, &rows))?;
    let ep = env.episode().expect("reset");
    let status = ep.status();
    println!(
        "status {status}, steps {}, success {}, peak |F_ext - F_d| {:.4} N",
        ep.stats().steps,
        status == EpisodeStatus::Finished,
        ep.stats().peak_force_error
    );
    if status == EpisodeStatus::Error {
        return Err(CliError::episode(format!("episode ended in error (trace in {})", path.display())));
    }
    Ok(())
}

pub fn train(common: &Common, resume: Option<&Path>, max_steps: Option<u64>) -> Result<(), CliError> {
    let cfg = load(common)?;
    let model = read_model(&cfg.model_path())?;
    let env = VicEnv::new(&cfg.task, &model, cfg.episode, 0.0)?;
    let eval_env = env.clone();
    let mut trainer = match resume {
        Some(path) => {
            let ck: Checkpoint = io::read_json(io::open(path)?)?;
            Trainer::resume(env, eval_env, ck)?
        }
        None => Trainer::new(env, eval_env, cfg.train, cfg.seed)?,
    };
    let curve_path = cfg.out.join("curve.csv");
    let limit = max_steps.unwrap_or(u64::MAX);
    while !trainer.is_done() && trainer.step_count() < limit {
        match trainer.step() {
            Ok(Some(p)) => {
                io::save(&curve_path, |w| io::write_curve(w, trainer.curve()))?;
                println!("step {} mean return {:.3} success {:.2}", p.step, p.mean_return, p.success_rate);
            }
            Ok(None) => {}
            Err(e) => {
                io::save(&curve_path, |w| io::write_curve(w, trainer.curve()))?;
                return Err(e.into());
            }
        }
    }
    io::save(&curve_path, |w| io::write_curve(w, trainer.curve()))?;
    io::save(cfg.out.join("checkpoint.json"), |w| io::write_json(w, &trainer.checkpoint()?))?;
    io::save(cfg.out.join("policy.json"), |w| io::write_json(w, &trainer.policy_file()))?;
    println!("{} steps, {} episodes", trainer.step_count(), trainer.episodes());
    Ok(())
}

/// One row of the success-rate table.
struct Outcome {
    condition: String,
    offset: f64,
    successes: usize,
    trials: usize,
    mean_peak_force: f64,
}

fn evaluate(
    cfg: &RunConfig,
    model: &DmpModel,
    name: &str,
    controller: &Controller,
    offset: f64,
    trials: usize,
) -> Result<Outcome, CliError> {
    let mut env = environment(cfg, model, offset, controller)?;
    let mut successes = 0;
    let mut peak = 0.0;
    for i in 0..trials {
        episode(&mut env, controller, cfg.seed.wrapping_add(i as u64))?;
        let ep = env.episode().expect("reset");
        successes += usize::from(ep.status() == EpisodeStatus::Finished);
        peak += ep.stats().peak_force;
    }
    Ok(Outcome { condition: name.into(), offset, successes, trials, mean_peak_force: peak / trials as f64 })
}

pub fn eval(common: &Common, offsets: &[f64], trials: Option<usize>, policy: Option<&Path>) -> Result<(), CliError> {
    let cfg = load(common)?;
    let model = read_model(&cfg.model_path())?;
    let trials = trials.unwrap_or(cfg.eval.trials);
    if trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let offsets = if offsets.is_empty() { cfg.eval.offsets.clone() } else { offsets.to_vec() };
    let policy_path = policy.map(Path::to_path_buf).or_else(|| cfg.eval.policy.then(|| cfg.policy_path()));
    let loaded = policy_path.as_deref().map(read_policy).transpose()?;

    let mut rows = Vec::new();
    for &offset in &offsets {
        for c in &cfg.eval.conditions {
            rows.push(evaluate(&cfg, &model, &c.name, &Controller::Fixed(c.stiffness()), offset, trials)?);
        }
        if let Some(p) = &loaded {
            rows.push(evaluate(&cfg, &model, "policy", &Controller::Learned(p), offset, trials)?);
        }
    }

    let path = cfg.out.join("eval.csv");
    io::save(&path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["condition", "offset_mm", "successes", "trials", "rate", "mean_peak_force"])?;
        for r in &rows {
            out.write_record([
                r.condition.clone(),
                format!("{}", r.offset),
                r.successes.to_string(),
                r.trials.to_string(),
                format!("{}", r.successes as f64 / r.trials as f64),
                format!("{}", r.mean_peak_force),
            ])?;
        }
        out.flush()?;
        Ok(())
    })?;
    println!("{:<12} {:>9} {:>9} {:>7} {:>14}", "condition", "offset_mm", "successes", "rate", "peak |F| (N)");
    for r in &rows {
        println!(
            "{:<12} {:>9} {:>5}/{:<3} {:>6.1}% {:>14.3}",
            r.condition,
            r.offset,
            r.successes,
            r.trials,
            100.0 * r.successes as f64 / r.trials as f64,
            r.mean_peak_force
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
