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

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p vic-cli --test acceptance`; pass criterion numbers
//! after `--` to run a subset. The process exits non-zero if any criterion
//! fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vic_core::admittance::{self, AdmittanceState, ImpedanceGains, Pose, Stiffness, Wrench};
use vic_core::dmp::{self, synthetic, Demonstration, DmpConfig, DmpModel, RolloutSample};
use vic_core::env::{synth_demonstration, ContactWorld, EpisodeConfig, Geometry, Task, TaskKind, VicEnv};
use vic_core::quat::{self, RotVec, UnitQuaternion};
use vic_core::sac::mlp::{shape, Mlp};
use vic_core::sac::policy::Policy;
use vic_core::sac::reward::{reward, EpisodeStatus, Thresholds, TrackingError};
use vic_core::sac::train::{CurvePoint, TrainConfig, Trainer};
use vic_core::sac::Environment;

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1

fn random_unit(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    loop {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n < 1.0 {
            return UnitQuaternion::from_wxyz(c[0] / n, c[1] / n, c[2] / n, c[3] / n).unwrap();
        }
    }
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).normalize()
}

fn quaternion_suite() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut log_exp: f64 = 0.0;
    let mut exp_log: f64 = 0.0;
    let mut inverse: f64 = 0.0;
    for _ in 0..10_000 {
        let r = random_direction(&mut rng) * rng.random_range(1e-9..PI);
        log_exp = log_exp.max((quat::qlog(&quat::qexp(&RotVec(r))).0 - r).amax());

        let q = random_unit(&mut rng);
        let back = quat::qexp(&quat::qlog(&q));
        let d = |a: &UnitQuaternion, s: f64| {
            let (x, y) = (a.wxyz(), q.wxyz());
            (0..4).map(|i| (x[i] - s * y[i]).abs()).fold(0.0, f64::max)
        };
        exp_log = exp_log.max(d(&back, 1.0).min(d(&back, -1.0)));

        let w = random_direction(&mut rng) * rng.random_range(0.0..10.0);
        let dt = rng.random_range(1e-4..1e-2);
        let w_back = quat::angular_velocity(&quat::integrate_orientation(&q, &w, dt), &q, dt).unwrap();
        inverse = inverse.max((w_back - w).amax());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        log_exp < 1e-9 && exp_log < 1e-9 && inverse < 1e-6 && secs < 5.0,
        format!("log∘exp {log_exp:.1e}, exp∘log {exp_log:.1e}, ω round trip {inverse:.1e} rad/s, {secs:.2} s"),
    )
}

// ---------------------------------------------------------------- 2

/// Drives one linear axis with a constant force difference; returns `x_e(t)`.
fn linear_response(k: f64, force: f64, secs: f64) -> Vec<f64> {
    let gains = ImpedanceGains::uniform(k, 10.0).unwrap();
    let f_ext = Wrench::new(Vector3::new(force, 0.0, 0.0), Vector3::zeros());
    let mut st = AdmittanceState::default();
    let n = (secs / 1e-3).round() as usize;
    let mut xs = vec![0.0];
    for _ in 0..n {
        st = admittance::step(&st, &gains, &f_ext, &Wrench::zero(), 1e-3).unwrap();
        xs.push(st.x_e_p.x);
    }
    xs
}

fn admittance_analytics() -> Verdict {
    let (m, k, f): (f64, f64, f64) = (5.0, 500.0, 10.0);
    let x_ss = f / k;
    let w = (k / m).sqrt();
    let xs = linear_response(k, f, 5.0);
    let worst = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let t = i as f64 * 1e-3;
            (x - x_ss * (1.0 - (1.0 + w * t) * (-w * t).exp())).abs()
        })
        .fold(0.0, f64::max);
    let step_ok = worst <= 1e-3 * x_ss;

    let mut steady = Vec::new();
    for k in [20.0, 600.0, 2000.0] {
        let x = *linear_response(k, f, 20.0).last().unwrap();
        steady.push(((x - f / k) / (f / k)).abs());
    }
    let steady_ok = steady.iter().all(|e| *e <= 1e-4);
    check(
        step_ok && steady_ok,
        format!(
            "step response max error {:.4}% of x_ss; steady-state relative errors {:.1e}/{:.1e}/{:.1e} for K = 20/600/2000",
            100.0 * worst / x_ss,
            steady[0],
            steady[1],
            steady[2]
        ),
    )
}

// ---------------------------------------------------------------- 3

/// Holds a reference 2 mm inside a wall and asks for 10 N; returns the
/// settled force error and `‖x_e‖`.
fn wall_hold(k_p: f64) -> (f64, f64, f64) {
    let world = ContactWorld::new(Geometry::Wall { height: 0.0 }).unwrap();
    let gains = ImpedanceGains::uniform(k_p, 10.0).unwrap();
    let x_d = Pose::from_position(Vector3::new(0.4, 0.0, -0.002));
    let f_d = Wrench::new(Vector3::new(0.0, 0.0, 10.0), Vector3::zeros());
    let mut st = AdmittanceState::default();
    let mut f_ext = Wrench::zero();
    for _ in 0..20_000 {
        st = admittance::step(&st, &gains, &f_ext, &f_d, 1e-3).unwrap();
        let pose = admittance::commanded_pose(&x_d, &st);
        let v = x_d.q.rotate(&st.v_e);
        f_ext = world.contact_wrench(&pose, &v);
    }
    let err = (f_ext.f - f_d.f).norm();
    (err, st.x_e_p.norm(), f_d.f.norm())
}

fn force_position_tradeoff() -> Verdict {
    let (err_soft, _, fd) = wall_hold(20.0);
    let (err_stiff, xe_stiff, _) = wall_hold(2000.0);
    let bound = err_stiff / 2000.0 + 1e-5;
    check(
        err_soft <= 0.02 * fd && xe_stiff <= bound,
        format!(
            "K=20: |F_ext - F_d| = {err_soft:.4} N ({:.2}% of |F_d|); K=2000: ‖x_e‖ = {:.4} mm ≤ {:.4} mm",
            100.0 * err_soft / fd,
            1e3 * xe_stiff,
            1e3 * bound
        ),
    )
}

// ---------------------------------------------------------------- 4-7

fn position_rmse(demo: &Demonstration, out: &[RolloutSample]) -> Vector3<f64> {
    let mut se = Vector3::zeros();
    for (a, b) in out.iter().zip(demo.samples()) {
        let d = a.pose.p - b.pose.p;
        se += d.component_mul(&d);
    }
    (se / demo.len() as f64).map(f64::sqrt)
}

fn force_rmse(demo: &Demonstration, out: &[RolloutSample]) -> f64 {
    let se: f64 = out.iter().zip(demo.samples()).map(|(a, b)| (a.wrench.f - b.wrench.f).norm_squared()).sum();
    (se / demo.len() as f64).sqrt()
}

fn fit_and_roll(demo: &Demonstration, n: usize) -> (DmpModel, Vec<RolloutSample>) {
    let model = dmp::fit(demo, &DmpConfig::new(n)).unwrap();
    let out = dmp::rollout(&model, demo.dt(), demo.duration()).unwrap();
    (model, out)
}

fn dmp_reconstruction() -> Verdict {
    let start = Instant::now();
    let demo = synthetic::reach().unwrap();
    let range = demo.position_range();
    let mut rel = Vec::new();
    let mut end_err: f64 = 0.0;
    for n in [100, 1000, 10000] {
        let (model, out) = fit_and_roll(&demo, n);
        rel.push(position_rmse(&demo, &out).component_div(&range));
        end_err = end_err.max((out.last().unwrap().pose.p - model.g).component_div(&range).amax());
    }
    let secs = start.elapsed().as_secs_f64();
    let decreasing = (0..3).all(|j| rel[0][j] > rel[1][j] && rel[1][j] > rel[2][j]);
    let pct = |v: &Vector3<f64>| format!("{:.3}/{:.3}/{:.3}%", 100.0 * v.x, 100.0 * v.y, 100.0 * v.z);
    check(
        rel[1].amax() < 0.01 && decreasing && end_err < 1e-3 && secs < 30.0,
        format!(
            "RMSE/range N=100 {}, N=1000 {}, N=10000 {}; endpoint {:.1e}·range; {secs:.1} s",
            pct(&rel[0]),
            pct(&rel[1]),
            pct(&rel[2]),
            end_err
        ),
    )
}

fn force_regression() -> Verdict {
    let demo = synthetic::step_contact(10.0).unwrap();
    let e: Vec<f64> = [100, 1000, 10000].iter().map(|&n| force_rmse(&demo, &fit_and_roll(&demo, n).1)).collect();
    check(e[0] > e[1] && e[1] > e[2], format!("force RMSE {:.4} > {:.4} > {:.4} N", e[0], e[1], e[2]))
}

fn orientation_dmp() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut reached = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = random_unit(&mut rng);
        // half-angle below π/4: geodesic distance below 90°
        let turn = quat::qexp(&RotVec(random_direction(&mut rng) * rng.random_range(0.0..FRAC_PI_4)));
        let goal = quat::multiply(&turn, &start);
        let demo = synthetic::rotation(start, goal, 5.0, 0.01).unwrap();
        let (model, out) = fit_and_roll(&demo, 100);
        let e = quat::orientation_error(&out.last().unwrap().pose.q, &model.g_o);
        worst = worst.max(e);
        reached += usize::from(e < 0.01);
    }
    check(reached == 100, format!("{reached}/100 seeds reach the goal, worst e_o {worst:.2e} rad"))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn goal_generalization() -> Verdict {
    let demo = synthetic::reach().unwrap();
    let range = demo.position_range();
    let (model, a) = fit_and_roll(&demo, 1000);
    let delta = Vector3::new(0.2, -0.2, 0.2).component_mul(&range);
    let moved = model.with_goal(model.g + delta);
    let b = dmp::rollout(&moved, demo.dt(), demo.duration()).unwrap();
    let end = (b.last().unwrap().pose.p - moved.g).component_div(&range).amax();
    let corr: Vec<f64> = (0..3)
        .map(|j| {
            let norm = |s: &[RolloutSample], g: f64| -> Vec<f64> {
                s.iter().map(|r| (r.pose.p[j] - model.x0.p[j]) / (g - model.x0.p[j])).collect()
            };
            correlation(&norm(&a, model.g[j]), &norm(&b, moved.g[j]))
        })
        .collect();
    let min = corr.iter().copied().fold(1.0, f64::min);
    check(
        end < 1e-3 && min > 0.99,
        format!("‖δ‖ = {:.1} mm, endpoint {end:.1e}·range, shape correlation ≥ {min:.5}", 1e3 * delta.norm()),
    )
}

// ---------------------------------------------------------------- 8

fn oracle_forward(net: &Mlp<f64>, x: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let mut h = x.to_vec();
    let mut pattern = Vec::new();
    let last = net.layers.len() - 1;
    for (l, layer) in net.layers.iter().enumerate() {
        let mut y: Vec<f64> = (0..layer.w.nrows())
            .map(|i| layer.b[i] + (0..h.len()).map(|j| layer.w[(i, j)] * h[j]).sum::<f64>())
            .collect();
        if l < last {
            for v in &mut y {
                pattern.push(*v > 0.0);
                *v = v.max(0.0);
            }
        }
        h = y;
    }
    (h, pattern)
}

fn gradient_check() -> Verdict {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..100 {
        let sizes = if i % 2 == 0 { shape(13, 12) } else { shape(19, 1) };
        let net = Mlp::<f64>::new(&sizes, &mut rng).unwrap();
        let x: Vec<f64> = (0..sizes[0]).map(|_| rng.sample(StandardNormal)).collect();
        let c: Vec<f64> = (0..net.output_dim()).map(|_| rng.sample(StandardNormal)).collect();
        let f = |out: &[f64]| out.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
        let (_, cache) = net.forward_cached(&DMatrix::from_column_slice(x.len(), 1, &x)).unwrap();
        let (grads, _) = net.backward(&cache, &DMatrix::from_column_slice(c.len(), 1, &c), false);
        let (_, base) = oracle_forward(&net, &x);
        let mut done = 0;
        while done < 40 {
            let l = rng.random_range(0..net.layers.len());
            let r = rng.random_range(0..net.layers[l].w.nrows());
            let col = rng.random_range(0..net.layers[l].w.ncols());
            let side = |s: f64| {
                let mut n = net.clone();
                n.layers[l].w[(r, col)] += s;
                let (out, pat) = oracle_forward(&n, &x);
                (pat == base).then(|| f(&out))
            };
            // resample parameters whose perturbation crosses a ReLU kink
            let (Some(hi), Some(lo)) = (side(h), side(-h)) else { continue };
            let num = (hi - lo) / (2.0 * h);
            let ana = grads.layers[l].w[(r, col)];
            if ana != num {
                worst = worst.max((ana - num).abs() / ana.abs().max(num.abs()));
            }
            done += 1;
        }
        checked += done;
    }
    check(worst < 1e-4, format!("{checked} parameters over 100 networks, max relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- 9

fn reward_units() -> Verdict {
    let th = Thresholds::default();
    let zero = TrackingError::default();
    let r = |s| reward(&zero, &th, s);
    let running = r(EpisodeStatus::Running);
    let got = [
        r(EpisodeStatus::Finished) - running,
        r(EpisodeStatus::Terminated) - running,
        r(EpisodeStatus::Error) - running,
    ];
    check(
        running == 2.0 && got == [100.0, -50.0, -100.0],
        format!("running {running}, finished {:+}, terminated {:+}, error {:+}", got[0], got[1], got[2]),
    )
}

// ---------------------------------------------------------------- 10-11

fn task_model(kind: TaskKind) -> (Task, DmpModel) {
    let task = Task::preset(kind);
    let demo = synth_demonstration(&task.world, &task.script).unwrap();
    let model = dmp::fit(&demo, &DmpConfig::new(1000)).unwrap();
    (task, model)
}

fn train(task: &Task, model: &DmpModel, seed: u64, label: &str) -> Result<(Trainer<VicEnv>, Duration), String> {
    let env = VicEnv::new(task, model, EpisodeConfig::default(), 0.0).map_err(|e| e.to_string())?;
    let mut tr = Trainer::new(env.clone(), env, TrainConfig::default(), seed).map_err(|e| e.to_string())?;
    let start = Instant::now();
    tr.run(|_, p: &CurvePoint| {
        eprintln!(
            "  [{label}] step {:>5}  mean return {:>8.2}  success {:.2}  ({:.0} s)",
            p.step,
            p.mean_return,
            p.success_rate,
            start.elapsed().as_secs_f64()
        );
        true
    })
    .map_err(|e| e.to_string())?;
    Ok((tr, start.elapsed()))
}

fn learning_progress() -> Verdict {
    let (task, model) = task_model(TaskKind::Wall);
    let (tr, took) = train(&task, &model, 7, "wall")?;
    let curve = tr.curve();
    if curve.len() < 10 {
        return Err(format!("only {} evaluations", curve.len()));
    }
    let mean = |ps: &[CurvePoint]| ps.iter().map(|p| p.mean_return).sum::<f64>() / ps.len() as f64;
    let first = mean(&curve[..5]);
    let last = mean(&curve[curve.len() - 5..]);
    let mins = took.as_secs_f64() / 60.0;
    check(
        last > first && mins < 30.0,
        format!("{} steps: mean return first 5 evals {first:.2}, last 5 {last:.2}; {mins:.1} min", tr.step_count()),
    )
}

/// Success count over `trials` seeded episodes.
fn successes(env: &mut VicEnv, policy: Option<&Policy>, k: &Stiffness, trials: u64) -> usize {
    let mut wins = 0;
    for seed in 0..trials {
        let mut obs = env.reset(seed).unwrap();
        loop {
            let action = match policy {
                Some(p) => p.act(&obs).unwrap(),
                None => vic_core::env::encode_stiffness(k),
            };
            let out = env.step(&action).unwrap();
            if out.done {
                wins += usize::from(out.success);
                break;
            }
            obs = out.observation;
        }
    }
    wins
}

fn table_ordering() -> Verdict {
    let (task, model) = task_model(TaskKind::Tape);
    let (tr, _) = train(&task, &model, 11, "tape")?;
    let policy = tr.policy();
    let trials = 100;
    let conditions = [("low", 50.0, 0.5), ("middle", 605.0, 13.0), ("high", 2000.0, 40.0)];
    let mut rates = Vec::new();
    for (name, kp, ko) in conditions {
        let k = *ImpedanceGains::saturating(Stiffness::new(kp, kp, kp, ko, ko, ko)).stiffness();
        let mut row = Vec::new();
        for offset in [0.0, 1.0] {
            let mut env = VicEnv::new(&task, &model, EpisodeConfig::default(), offset)
                .unwrap()
                .with_initial_stiffness(k)
                .unwrap();
            row.push(successes(&mut env, None, &k, trials));
        }
        rates.push((name, row));
    }
    let mut learned = Vec::new();
    for offset in [0.0, 1.0] {
        let mut env = VicEnv::new(&task, &model, EpisodeConfig::default(), offset).unwrap();
        learned.push(successes(&mut env, Some(&policy), &Stiffness::zeros(), trials));
    }
    let ordered = rates[0].1[0] < rates[1].1[0] && rates[1].1[0] < rates[2].1[0];
    // best fixed-gain condition: highest success on the unshifted fixture
    let best = rates.iter().max_by_key(|(_, r)| r[0]).unwrap();
    let best_drop = best.1[0] as i64 - best.1[1] as i64;
    let policy_drop = learned[0] as i64 - learned[1] as i64;
    let table: Vec<String> = rates
        .iter()
        .map(|(n, r)| format!("{n} {}%/{}%", r[0], r[1]))
        .chain([format!("policy {}%/{}%", learned[0], learned[1])])
        .collect();
    check(
        ordered && policy_drop <= best_drop,
        format!(
            "success unshifted/offset: {}; drop policy {policy_drop} pts vs best fixed ({}) {best_drop} pts",
            table.join(", "),
            best.0
        ),
    )
}

// ---------------------------------------------------------------- 12

const DETERMINISM_CONFIG: &str = r#"
seed = 5
task = "wall-1dof"
out = "out"

[dmp]
n_basis = 200

[train]
learning_starts = 50
eval_every = 100
eval_episodes = 1

[train.sac]
batch_size = 32
buffer_capacity = 1000
total_steps = 300

[eval]
trials = 4
offsets = [0.0, 1.0]
policy = true
"#;

fn vic(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out =
        Command::new(env!("CARGO_BIN_EXE_vic")).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("vic {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    fs::write(dir.join("run.toml"), DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let c = ["--config", "run.toml"];
    for cmd in ["demo", "fit", "rollout", "train", "eval"] {
        vic(dir, &[&[cmd][..], &c[..]].concat())?;
    }
    vic(dir, &["plotdata", "out/trace.csv", "out/curve.csv", "--out", "out/plot.csv"])?;
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.join("out"))
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Verdict {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fa = pipeline(a.path())?;
    let fb = pipeline(b.path())?;
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = fa.iter().zip(&fb).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    check(
        fa.len() == fb.len() && differing.is_empty() && fa.len() >= 8,
        format!("{} files compared ({}); differing: {:?}", fa.len(), names.join(", "), differing),
    )
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "quaternion suite", quaternion_suite),
        (2, "admittance analytics", admittance_analytics),
        (3, "force/position trade-off", force_position_tradeoff),
        (4, "DMP reconstruction", dmp_reconstruction),
        (5, "force regression", force_regression),
        (6, "orientation DMP", orientation_dmp),
        (7, "goal generalization", goal_generalization),
        (8, "gradient check", gradient_check),
        (9, "reward unit values", reward_units),
        (10, "learning progress", learning_progress),
        (11, "success-rate ordering", table_ordering),
        (12, "determinism", determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("PASS {n:>2} {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {d} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
