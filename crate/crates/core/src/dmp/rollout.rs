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

//! Execution: integrates the attractors forward in time.

use nalgebra::Vector3;

use super::{goal_log, phase, DmpModel};
use crate::admittance::{Pose, Wrench};
use crate::error::{invalid, Result};
use crate::quat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutSample {
    pub t: f64,
    pub pose: Pose,
    pub wrench: Wrench,
}

/// Integrates the attractors and emits the desired pose and wrench at
/// `0, dt, …, duration`.
///
/// Position uses the central-difference (Störmer) recurrence
/// `x₊ − 2x + x₋ = dt²·ẍ` with `ẋ = (x₊ − x₋)/2dt`, the exact inverse of the
/// stencils [`super::target_forcing`] differentiates with; orientation uses
/// semi-implicit Euler on the angular velocity. The forcing terms are only
/// defined over the demonstrated phase range; past it they are zero and the
/// desired wrench holds its final value.
pub fn rollout(model: &DmpModel, dt: f64, duration: f64) -> Result<Vec<RolloutSample>> {
    if !(dt > 0.0) || !(duration > 0.0) {
        return Err(invalid(format!("rollout needs positive dt and duration, got {dt}, {duration}")));
    }
    model.validate()?;
    let c = &model.config;
    let (a, b, tau) = (c.alpha_x, c.beta_x, c.tau);
    let tau2 = tau * tau;
    let steps = (duration / dt).round() as usize;
    let scale = model.position_scale();
    let scale_o = model.orientation_scale();
    let z_end = phase(c.duration, c);
    // implicit central damping term
    let damp = a * tau * dt / (2.0 * tau2);

    let mut x = model.x0.p;
    let mut x_prev = model.x0.p;
    let mut q = model.x0.q;
    let mut w = Vector3::zeros();
    let mut psi = Vec::with_capacity(model.grid.len());
    let mut out = Vec::with_capacity(steps + 1);

    for k in 0..=steps {
        let t = k as f64 * dt;
        let z = phase(t, c);
        model.grid.activations_into(z.max(z_end), &mut psi)?;
        let dot = |row: &Vec<f64>| -> f64 { row.iter().zip(&psi).map(|(w, p)| w * p).sum() };

        let mut f = [0.0; 6];
        for (j, row) in model.w_f.iter().enumerate() {
            f[j] = dot(row);
        }
        out.push(RolloutSample { t, pose: Pose::new(x, q), wrench: Wrench::from_array(f) });
        if k == steps {
            break;
        }

        let gate = if z >= z_end { z } else { 0.0 };
        let forcing = Vector3::from_fn(|j, _| scale[j] * dot(&model.w_p[j]) * gate);
        let drive = (a * b * (model.g - x) + forcing) * (dt * dt / tau2);
        let x_next = if k == 0 {
            // starts at rest: x₋ = x₊
            x + drive * 0.5
        } else {
            (2.0 * x - x_prev * (1.0 - damp) + drive) / (1.0 + damp)
        };
        x_prev = x;
        x = x_next;

        let dist = goal_log(&model.g_o, &q);
        let forcing_o = Vector3::from_fn(|j, _| scale_o[j] * dot(&model.w_o[j]) * gate);
        let alpha = (a * (b * 2.0 * dist - tau * w) + forcing_o) / tau2;
        w += alpha * dt;
        q = quat::integrate_orientation(&q, &w, dt);
    }
    Ok(out)
}
