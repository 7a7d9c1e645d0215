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

use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_4, PI};
use vic_core::admittance::{Pose, Wrench};
use vic_core::dmp::{
    basis, fit, phase, resample, rollout, synthetic, target_forcing, DemoSample, Demonstration, DmpConfig,
    RolloutSample,
};
use vic_core::quat::{self, RotVec, UnitQuaternion};

fn position_rmse(demo: &Demonstration, out: &[RolloutSample]) -> Vector3<f64> {
    assert_eq!(demo.len(), out.len());
    let mut se = Vector3::zeros();
    for (a, b) in out.iter().zip(demo.samples()) {
        let d = a.pose.p - b.pose.p;
        se += d.component_mul(&d);
    }
    (se / out.len() as f64).map(f64::sqrt)
}

fn force_rmse(demo: &Demonstration, out: &[RolloutSample]) -> f64 {
    let se: f64 = out
        .iter()
        .zip(demo.samples())
        .map(|(a, b)| {
            let d = a.wrench.f - b.wrench.f;
            d.norm_squared()
        })
        .sum();
    (se / out.len() as f64).sqrt()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn position_error_shrinks_with_basis_count() {
    let demo = synthetic::reach().unwrap();
    let range = demo.position_range();
    let mut errors = Vec::new();
    for n in [100, 1000, 10000] {
        let model = fit(&demo, &DmpConfig::new(n)).unwrap();
        let out = rollout(&model, demo.dt(), demo.duration()).unwrap();
        let rel = position_rmse(&demo, &out).component_div(&range);
        let end = (out.last().unwrap().pose.p - model.g).component_div(&range);
        assert!(end.amax() < 1e-3, "N={n} endpoint {end:?}");
        errors.push(rel);
    }
    assert!(errors[1].amax() < 0.01, "N=1000 rmse/range {:?}", errors[1]);
    for j in 0..3 {
        assert!(errors[0][j] > errors[1][j] && errors[1][j] > errors[2][j], "axis {j}: {errors:?}");
    }
}

#[test]
fn force_error_shrinks_with_basis_count() {
    let demo = synthetic::step_contact(10.0).unwrap();
    let errors: Vec<f64> = [100, 1000, 10000]
        .iter()
        .map(|&n| {
            let model = fit(&demo, &DmpConfig::new(n)).unwrap();
            force_rmse(&demo, &rollout(&model, demo.dt(), demo.duration()).unwrap())
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn constant_force_is_reproduced() {
    let base = synthetic::reach().unwrap();
    let f = Wrench::from_array([1.5, -2.0, 7.25, 0.1, 0.0, -0.3]);
    let samples = base.samples().iter().map(|s| DemoSample { wrench: f, ..*s }).collect();
    let demo = Demonstration::new(samples).unwrap();
    for n in [1, 10, 100] {
        let model = fit(&demo, &DmpConfig::new(n)).unwrap();
        for s in rollout(&model, 0.05, demo.duration()).unwrap() {
            for (a, b) in s.wrench.to_array().iter().zip(f.to_array()) {
                assert!((a - b).abs() < 1e-6, "N={n} t={} {a} vs {b}", s.t);
            }
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    loop {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n < 1.0 {
            return UnitQuaternion::from_wxyz(c[0] / n, c[1] / n, c[2] / n, c[3] / n).unwrap();
        }
    }
}

#[test]
fn orientation_rollouts_reach_goal() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = random_unit(&mut rng);
        let axis = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
        // half-angle ≤ π/4, so geodesic ≤ 90°
        let turn = quat::qexp(&RotVec(axis * rng.random_range(0.0..FRAC_PI_4)));
        let goal = turn * start;
        let demo = synthetic::rotation(start, goal, 5.0, 0.01).unwrap();
        let model = fit(&demo, &DmpConfig::new(100)).unwrap();
        let out = rollout(&model, 0.01, demo.duration()).unwrap();
        let end = out.last().unwrap().pose.q;
        let e = quat::orientation_error(&end, &model.g_o);
        assert!(e < 0.01, "seed {seed}: e_o = {e}");
        assert!(quat::orientation_error(&quat::shortest(model.g_o), &quat::shortest(goal)) < 1e-9);
    }
}

#[test]
fn retargeted_goal_keeps_shape() {
    let demo = synthetic::reach().unwrap();
    let range = demo.position_range();
    let model = fit(&demo, &DmpConfig::new(1000)).unwrap();
    let delta = Vector3::new(0.2, -0.2, 0.2).component_mul(&range);
    assert!((delta.norm() - 0.2 * range.norm()).abs() < 1e-12);
    let moved = model.with_goal(model.g + delta);

    let a = rollout(&model, demo.dt(), demo.duration()).unwrap();
    let b = rollout(&moved, demo.dt(), demo.duration()).unwrap();
    let end = (b.last().unwrap().pose.p - moved.g).component_div(&range);
    assert!(end.amax() < 1e-3, "{end:?}");
    for j in 0..3 {
        let norm = |s: &[RolloutSample], g: f64| -> Vec<f64> {
            s.iter().map(|r| (r.pose.p[j] - model.x0.p[j]) / (g - model.x0.p[j])).collect()
        };
        let c = correlation(&norm(&a, model.g[j]), &norm(&b, moved.g[j]));
        assert!(c > 0.99, "axis {j}: correlation {c}");
    }
}

#[test]
fn forcing_of_generated_trajectory_is_recovered() {
    let known = fit(&synthetic::reach().unwrap(), &DmpConfig::new(50)).unwrap();
    let out = rollout(&known, 0.01, known.config.duration).unwrap();
    let samples = out.iter().map(|s| DemoSample { t: s.t, pose: s.pose, wrench: s.wrench }).collect();
    let demo = Demonstration::new(samples).unwrap();
    let recovered = target_forcing(&demo, &known.config).unwrap();
    let scale = known.position_scale();
    for j in 0..3 {
        let mut se = 0.0;
        let mut ss = 0.0;
        for (k, s) in out.iter().enumerate().skip(1) {
            let z = phase(s.t, &known.config);
            let psi = basis(z, &known.grid).unwrap();
            let f: f64 = known.w_p[j].iter().zip(&psi).map(|(w, p)| w * p).sum::<f64>() * z * scale[j];
            se += (recovered.position[j][k] - f).powi(2);
            ss += f * f;
        }
        let rel = (se / ss).sqrt();
        assert!(rel < 0.02, "axis {j}: relative RMS {rel}");
    }
}

#[test]
fn refit_of_rollout_matches_first_fit() {
    // The overlapping basis makes individual weights poorly identifiable, so
    // the comparison is on the forcing they produce.
    for n in [50, 1000] {
        let config = DmpConfig::new(n);
        let first = fit(&synthetic::reach().unwrap(), &config).unwrap();
        let out = rollout(&first, 0.01, first.config.duration).unwrap();
        let samples = out.iter().map(|s| DemoSample { t: s.t, pose: s.pose, wrench: s.wrench }).collect();
        let second = fit(&Demonstration::new(samples).unwrap(), &config).unwrap();
        let (s1, s2) = (first.position_scale(), second.position_scale());
        for j in 0..3 {
            let (mut se, mut ss) = (0.0, 0.0);
            for s in &out {
                let z = phase(s.t, &config);
                let psi = basis(z, &first.grid).unwrap();
                let f = |w: &[f64], scale: f64| w.iter().zip(&psi).map(|(w, p)| w * p).sum::<f64>() * z * scale;
                let (a, b) = (f(&first.w_p[j], s1[j]), f(&second.w_p[j], s2[j]));
                se += (a - b).powi(2);
                ss += a * a;
            }
            let rel = (se / ss).sqrt();
            assert!(rel < 0.01, "N={n} axis {j}: relative forcing RMS {rel}");
        }
    }
}

#[test]
fn fitting_a_rollout_reconstructs_it_as_well_as_the_demo() {
    let demo = synthetic::reach().unwrap();
    for n in [100, 1000] {
        let config = DmpConfig::new(n);
        let first = fit(&demo, &config).unwrap();
        let out = rollout(&first, demo.dt(), demo.duration()).unwrap();
        let samples = out.iter().map(|s| DemoSample { t: s.t, pose: s.pose, wrench: s.wrench }).collect();
        let replay = Demonstration::new(samples).unwrap();
        let second = fit(&replay, &config).unwrap();
        let out2 = rollout(&second, replay.dt(), replay.duration()).unwrap();
        let (e1, e2) = (position_rmse(&demo, &out), position_rmse(&replay, &out2));
        for j in 0..3 {
            assert!(e2[j] <= 2.0 * e1[j], "N={n} axis {j}: {} vs {}", e2[j], e1[j]);
        }
    }
}

#[test]
fn resampling_at_same_rate_is_the_reconstruction() {
    let demo = synthetic::reach().unwrap();
    let config = DmpConfig::new(1000);
    let model = fit(&demo, &config).unwrap();
    let recon = position_rmse(&demo, &rollout(&model, demo.dt(), demo.duration()).unwrap());
    let same = resample(&demo, &config, demo.dt()).unwrap();
    let mut se = Vector3::zeros();
    for (a, b) in same.samples().iter().zip(demo.samples()) {
        let d = a.pose.p - b.pose.p;
        se += d.component_mul(&d);
    }
    let rmse = (se / demo.len() as f64).map(f64::sqrt);
    for j in 0..3 {
        assert!(rmse[j] <= recon[j], "axis {j}: {} > {}", rmse[j], recon[j]);
    }
}

#[test]
fn down_then_up_sampling_round_trips() {
    let demo = synthetic::reach().unwrap();
    let range = demo.position_range();
    let config = DmpConfig::new(200);
    let coarse = resample(&demo, &config, 0.05).unwrap();
    let fine = resample(&coarse, &config, 0.01).unwrap();
    assert_eq!(fine.len(), demo.len());
    let mut se = Vector3::zeros();
    for (a, b) in fine.samples().iter().zip(demo.samples()) {
        let d = a.pose.p - b.pose.p;
        se += d.component_mul(&d);
    }
    let rel = (se / demo.len() as f64).map(f64::sqrt).component_div(&range);
    assert!(rel.amax() < 0.02, "{rel:?}");
}

fn wavy_demo(x0: Vector3<f64>, g: Vector3<f64>, bumps: Vector3<f64>, secs: f64) -> Demonstration {
    let n = (secs / 0.01).round() as usize;
    let samples = (0..=n)
        .map(|k| {
            let t = k as f64 * 0.01;
            let u = (t / (0.9 * secs)).min(1.0);
            let env = (PI * u).sin().powi(2);
            let p = x0 + (g - x0) * synthetic::min_jerk(u) + bumps * ((3.0 * PI * u).sin() * env);
            DemoSample { t, pose: Pose::from_position(p), wrench: Wrench::zero() }
        })
        .collect();
    Demonstration::new(samples).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn rollouts_settle_on_goal(
        x0 in prop::array::uniform3(-0.5..0.5f64),
        travel in prop::array::uniform3(0.05..0.4f64),
        flip in prop::array::uniform3(any::<bool>()),
        bumps in prop::array::uniform3(-0.05..0.05f64),
        secs in 8.0..15.0f64,
        n in 100usize..1000,
    ) {
        let x0 = Vector3::from(x0);
        let g = x0 + Vector3::from_fn(|j, _| if flip[j] { -travel[j] } else { travel[j] });
        let demo = wavy_demo(x0, g, bumps.into(), secs);
        let range = demo.position_range();
        let model = fit(&demo, &DmpConfig::new(n)).unwrap();
        let out = rollout(&model, 0.01, 1.5 * demo.duration()).unwrap();
        let end = out.last().unwrap().pose.p - model.g;
        for j in 0..3 {
            prop_assert!(end[j].abs() <= 1e-3 * range[j], "axis {}: {} vs range {}", j, end[j], range[j]);
        }
    }
}
