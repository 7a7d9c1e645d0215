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

//! Commissioning: demonstration → forcing targets → basis weights.

use nalgebra::{DMatrix, Vector3};

use super::{goal_log, phase, rollout, BasisGrid, DemoSample, Demonstration, DmpConfig, DmpModel, DEGENERATE_SCALE};
use crate::error::{invalid, Result};
use crate::quat::{self, UnitQuaternion};

/// Forcing targets sampled at the demonstration timestamps.
#[derive(Debug, Clone)]
pub struct TargetForcing {
    /// Phase at each sample.
    pub z: Vec<f64>,
    /// `f_tar` per position axis.
    pub position: [Vec<f64>; 3],
    /// Orientation target per rotation axis.
    pub orientation: [Vec<f64>; 3],
}

/// Central differences inside, one-sided at the ends.
fn derivative(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| match k {
            0 => (x[1] - x[0]) / dt,
            k if k == n - 1 => (x[n - 1] - x[n - 2]) / dt,
            k => (x[k + 1] - x[k - 1]) / (2.0 * dt),
        })
        .collect()
}

/// Second derivative by three-point stencils (shifted at the ends).
fn second_derivative(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let c = k.clamp(1, n - 2);
            (x[c + 1] - 2.0 * x[c] + x[c - 1]) / (dt * dt)
        })
        .collect()
}

fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half).min(n - 1);
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn smoothed_samples(demo: &Demonstration, config: &DmpConfig) -> Vec<DemoSample> {
    let samples = demo.samples().to_vec();
    if !config.smoothing {
        return samples;
    }
    let mut out = samples.clone();
    for j in 0..3 {
        let col: Vec<f64> = samples.iter().map(|s| s.pose.p[j]).collect();
        for (s, v) in out.iter_mut().zip(moving_average(&col, 2)) {
            s.pose.p[j] = v;
        }
    }
    out
}

/// Forcing that would reproduce the demonstration exactly.
///
/// Velocities come from central differences (positions) and the quaternion
/// angular-velocity relation (orientations).
pub fn target_forcing(demo: &Demonstration, config: &DmpConfig) -> Result<TargetForcing> {
    config.validate()?;
    if demo.len() < 3 {
        return Err(invalid("demonstration too short to differentiate"));
    }
    let samples = smoothed_samples(demo, config);
    let dt = demo.dt();
    let t0 = samples[0].t;
    let (a, b, tau) = (config.alpha_x, config.beta_x, config.tau);
    let z: Vec<f64> = samples.iter().map(|s| phase(s.t - t0, config)).collect();

    let last = samples.last().unwrap();
    let g = last.pose.p;
    let position: [Vec<f64>; 3] = std::array::from_fn(|j| {
        let x: Vec<f64> = samples.iter().map(|s| s.pose.p[j]).collect();
        let xd = derivative(&x, dt);
        let xdd = second_derivative(&x, dt);
        (0..x.len()).map(|k| tau * tau * xdd[k] - a * (b * (g[j] - x[k]) - tau * xd[k])).collect()
    });

    let qs: Vec<UnitQuaternion> = samples.iter().map(|s| s.pose.q).collect();
    let g_o = *qs.last().unwrap();
    let n = qs.len();
    let mut omega = Vec::with_capacity(n);
    for k in 0..n {
        let w = match k {
            0 => quat::angular_velocity(&qs[1], &qs[0], dt)?,
            k if k == n - 1 => quat::angular_velocity(&qs[n - 1], &qs[n - 2], dt)?,
            k => quat::angular_velocity(&qs[k + 1], &qs[k - 1], 2.0 * dt)?,
        };
        omega.push(w);
    }
    let logs: Vec<Vector3<f64>> = qs.iter().map(|q| goal_log(&g_o, q)).collect();
    let mut orientation: [Vec<f64>; 3] = Default::default();
    for j in 0..3 {
        let w: Vec<f64> = omega.iter().map(|w| w[j]).collect();
        let wd = derivative(&w, dt);
        orientation[j] = (0..n).map(|k| tau * tau * wd[k] - a * (b * 2.0 * logs[k][j] - tau * w[k])).collect();
    }

    Ok(TargetForcing { z, position, orientation })
}

/// Ridge least squares `w = (ΨᵀΨ + λI)⁻¹ΨᵀF` for every column of `targets`.
///
/// `λ = 1e-8 · trace(ΨᵀΨ) / N`. When there are fewer rows than basis
/// functions the equivalent dual form `Ψᵀ(ΨΨᵀ + λI)⁻¹F` is solved instead.
/// Returns an `N × k` matrix.
pub fn fit_weights(psi: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, n) = psi.shape();
    if rows == 0 || n == 0 {
        return Err(invalid("empty design matrix"));
    }
    if targets.nrows() != rows {
        return Err(invalid(format!("design matrix has {rows} rows but targets have {}", targets.nrows())));
    }
    let trace = psi.iter().map(|x| x * x).sum::<f64>();
    if trace == 0.0 {
        return Ok(DMatrix::zeros(n, targets.ncols()));
    }
    let lambda = 1e-8 * trace / n as f64;
    let psi_t = psi.transpose();
    if n <= rows {
        let mut gram = &psi_t * psi;
        for i in 0..n {
            gram[(i, i)] += lambda;
        }
        let rhs = &psi_t * targets;
        let chol = gram.cholesky().ok_or_else(|| invalid("normal equations not positive definite"))?;
        Ok(chol.solve(&rhs))
    } else {
        let mut gram = psi * &psi_t;
        for i in 0..rows {
            gram[(i, i)] += lambda;
        }
        let chol = gram.cholesky().ok_or_else(|| invalid("normal equations not positive definite"))?;
        Ok(&psi_t * chol.solve(targets))
    }
}

/// Rows `ψ(z_t) · scale_t` for every sample.
fn design(grid: &BasisGrid, z: &[f64], scale: impl Fn(usize) -> f64) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let mut m = DMatrix::zeros(z.len(), n);
    let mut psi = Vec::with_capacity(n);
    for (t, &zt) in z.iter().enumerate() {
        grid.activations_into(zt, &mut psi)?;
        let s = scale(t);
        for (i, p) in psi.iter().enumerate() {
            m[(t, i)] = p * s;
        }
    }
    Ok(m)
}

fn rows_of(w: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..w.ncols()).map(|c| w.column(c).iter().copied().collect()).collect()
}

/// Fits position, orientation and wrench weights to a demonstration.
///
/// The goal is the final demonstrated pose. Position axes are regressed on
/// rows `ψ(z)·z` with targets `f_tar/(g − x₀)`, orientation axes on the same
/// rows with targets `f_tar/log(g_o q̄₀)`, and wrench axes on rows `ψ(z)`.
pub fn fit(demo: &Demonstration, config: &DmpConfig) -> Result<DmpModel> {
    let config = DmpConfig { dt: demo.dt(), duration: demo.duration(), ..*config };
    config.validate()?;
    let grid = BasisGrid::new(&config)?;
    let targets = target_forcing(demo, &config)?;
    let samples = demo.samples();
    let x0 = samples[0].pose;
    let last = samples.last().unwrap().pose;
    let rows = samples.len();
    let z = &targets.z;

    let unit_scale: [bool; 3] = std::array::from_fn(|j| (last.p[j] - x0.p[j]).abs() < DEGENERATE_SCALE);
    let scale: [f64; 3] = std::array::from_fn(|j| if unit_scale[j] { 1.0 } else { last.p[j] - x0.p[j] });

    let start_log = goal_log(&last.q, &x0.q);
    let unit_scale_o: [bool; 3] = std::array::from_fn(|j| start_log[j].abs() < DEGENERATE_SCALE);
    let scale_o: [f64; 3] = std::array::from_fn(|j| if unit_scale_o[j] { 1.0 } else { start_log[j] });

    let phi = design(&grid, z, |t| z[t])?;
    let f_shape = DMatrix::from_fn(rows, 6, |t, j| {
        if j < 3 {
            targets.position[j][t] / scale[j]
        } else {
            targets.orientation[j - 3][t] / scale_o[j - 3]
        }
    });
    let w_shape = fit_weights(&phi, &f_shape)?;
    drop(phi);
    let w_shape = rows_of(&w_shape);

    let psi = design(&grid, z, |_| 1.0)?;
    let f_wrench = DMatrix::from_fn(rows, 6, |t, j| samples[t].wrench.to_array()[j]);
    let w_f = fit_weights(&psi, &f_wrench)?;

    let model = DmpModel {
        config,
        grid,
        w_p: w_shape[..3].to_vec(),
        w_o: w_shape[3..].to_vec(),
        w_f: rows_of(&w_f),
        x0,
        g: last.p,
        g_o: last.q,
        unit_scale,
        unit_scale_o,
    };
    model.validate()?;
    Ok(model)
}

/// Re-samples a demonstration at `new_dt` by fitting it and rolling it out.
pub fn resample(demo: &Demonstration, config: &DmpConfig, new_dt: f64) -> Result<Demonstration> {
    if !(new_dt > 0.0) {
        return Err(invalid(format!("sample period must be positive, got {new_dt}")));
    }
    let model = fit(demo, config)?;
    let t0 = demo.samples()[0].t;
    let samples = rollout(&model, new_dt, demo.duration())?
        .into_iter()
        .map(|s| DemoSample { t: t0 + s.t, pose: s.pose, wrench: s.wrench })
        .collect();
    Demonstration::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admittance::{Pose, Wrench};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn demo_from(positions: impl Fn(f64) -> Vector3<f64>, dt: f64, n: usize) -> Demonstration {
        Demonstration::new(
            (0..n)
                .map(|k| {
                    let t = k as f64 * dt;
                    DemoSample { t, pose: Pose::from_position(positions(t)), wrench: Wrench::zero() }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn resting_demo_has_zero_targets() {
        let d = demo_from(|_| Vector3::new(0.1, 0.2, 0.3), 0.01, 50);
        let tf = target_forcing(&d, &DmpConfig::new(10)).unwrap();
        for j in 0..3 {
            assert!(tf.position[j].iter().all(|f| f.abs() < 1e-12));
            assert!(tf.orientation[j].iter().all(|f| f.abs() < 1e-12));
        }
    }

    #[test]
    fn ramp_targets_match_symbolic_derivatives() {
        // x(t) = 0.1 t reaches g = 0.1 at t = 1; ẋ = 0.1, ẍ = 0
        let d = demo_from(|t| Vector3::new(0.1 * t, 0.0, 0.0), 0.01, 101);
        let c = DmpConfig::new(10);
        let tf = target_forcing(&d, &c).unwrap();
        for (k, f) in tf.position[0].iter().enumerate() {
            let t = k as f64 * 0.01;
            let expected = -c.alpha_x * (c.beta_x * (0.1 - 0.1 * t) - c.tau * 0.1);
            assert!(f.is_finite());
            assert_abs_diff_eq!(*f, expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn fit_weights_examples() {
        let ones = DMatrix::from_element(20, 1, 1.0);
        let w = fit_weights(&ones, &DMatrix::from_element(20, 1, 3.5)).unwrap();
        assert_abs_diff_eq!(w[(0, 0)], 3.5, epsilon = 1e-6);

        let psi = DMatrix::from_fn(30, 5, |r, c| ((r * 7 + c * 3) as f64).sin());
        let w = fit_weights(&psi, &DMatrix::zeros(30, 2)).unwrap();
        assert!(w.iter().all(|x| *x == 0.0));
        assert!(fit_weights(&psi, &DMatrix::zeros(29, 1)).is_err());
    }

    #[test]
    fn fit_weights_recovers_planted_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = DMatrix::from_fn(200, 20, |_, _| rng.random_range(-1.0..1.0));
        let truth = DMatrix::from_fn(20, 1, |_, _| rng.random_range(-50.0..50.0));
        let w = fit_weights(&psi, &(&psi * &truth)).unwrap();
        let rel = (&w - &truth).norm() / truth.norm();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn fit_weights_reproduces_basis_targets() {
        // the RBF design is ill-conditioned, so check the fitted values instead
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = DmpConfig { duration: 5.0, ..DmpConfig::new(40) };
        let grid = BasisGrid::new(&c).unwrap();
        let z: Vec<f64> = (0..500).map(|k| phase(k as f64 * 0.01, &c)).collect();
        let psi = design(&grid, &z, |t| z[t]).unwrap();
        let truth = DMatrix::from_fn(40, 1, |_, _| rng.random_range(-50.0..50.0));
        let y = &psi * &truth;
        let w = fit_weights(&psi, &y).unwrap();
        let rel = (&psi * &w - &y).norm() / y.norm();
        assert!(rel < 1e-4, "relative residual {rel}");
    }

    #[test]
    fn dual_and_primal_forms_agree() {
        let psi = DMatrix::from_fn(12, 30, |r, c| (-((r as f64 - c as f64 * 0.4).powi(2)) / 4.0).exp());
        let y = DMatrix::from_fn(12, 2, |r, c| (r as f64 * 0.3 + c as f64).cos());
        let dual = fit_weights(&psi, &y).unwrap();
        // primal on the same problem
        let trace = psi.iter().map(|x| x * x).sum::<f64>();
        let lambda = 1e-8 * trace / 30.0;
        let gram = psi.transpose() * &psi + DMatrix::identity(30, 30) * lambda;
        let primal = gram.lu().solve(&(psi.transpose() * &y)).unwrap();
        assert!((dual - primal).abs().max() < 1e-6);
    }

    #[test]
    fn still_demo_rolls_out_in_place() {
        let p = Vector3::new(0.4, -0.2, 0.3);
        let d = demo_from(|_| p, 0.01, 200);
        let m = fit(&d, &DmpConfig::new(50)).unwrap();
        assert_eq!(m.unit_scale, [true; 3]);
        for s in rollout(&m, 0.01, d.duration()).unwrap() {
            assert!((s.pose.p - p).norm() < 1e-6);
        }
    }

    #[test]
    fn resample_counts() {
        let d = demo_from(|t| Vector3::new(0.05 * (1.0 - (t * 2.0).cos()), 0.0, 0.0), 0.01, 201);
        let up = resample(&d, &DmpConfig::new(100), 0.001).unwrap();
        assert!((up.len() as i64 - 10 * (d.len() as i64 - 1) - 1).abs() <= 1);
        assert!(resample(&d, &DmpConfig::new(100), 0.0).is_err());
    }
}
