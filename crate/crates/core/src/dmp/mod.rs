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

//! Dynamic movement primitives for position, orientation and force.
//!
//! Position axes follow the point attractor
//! `τ²ẍ = α(β(g − x) − τẋ) + f(z)` with `f(z) = (g − x₀) Σ ψᵢ(z) wᵢ z`.
//! Orientation uses the quaternion form of the same attractor with the
//! distance `2·log(g_o q̄)`, and the desired wrench is a plain RBF regression
//! `F_d(z) = Σ ψᵢ(z) wᵢ^F`. All three share one phase clock
//! `z(t) = z₀ exp(−α_z t / τ)` and one basis grid.

mod fit;
mod rollout;
pub mod synthetic;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::admittance::{Pose, Wrench};
use crate::error::{invalid, Error, Result};
use crate::quat::{self, UnitQuaternion};

pub use fit::{fit, fit_weights, resample, target_forcing, TargetForcing};
pub use rollout::{rollout, RolloutSample};

/// Axes whose start-to-goal distance is below this use unit forcing scale.
pub const DEGENERATE_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpConfig {
    pub n_basis: usize,
    pub alpha_x: f64,
    pub beta_x: f64,
    pub tau: f64,
    pub alpha_z: f64,
    pub z0: f64,
    /// Sample period of the demonstration the model was fit on (s).
    pub dt: f64,
    /// Duration of that demonstration (s).
    pub duration: f64,
    /// Five-sample moving average over the demonstration before differentiating.
    #[serde(default)]
    pub smoothing: bool,
}

impl DmpConfig {
    /// `α_x = 6.25`, `β_x = α_x/4`, `τ = 25`, `α_z = 1`, `z₀ = 1`.
    /// `dt` and `duration` are filled in from the demonstration by [`fit`].
    pub fn new(n_basis: usize) -> Self {
        Self {
            n_basis,
            alpha_x: 6.25,
            beta_x: 6.25 / 4.0,
            tau: 25.0,
            alpha_z: 1.0,
            z0: 1.0,
            dt: 0.01,
            duration: 1.0,
            smoothing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_basis == 0 {
            return Err(invalid("basis count must be at least 1"));
        }
        let positive = [
            ("tau", self.tau),
            ("alpha_z", self.alpha_z),
            ("dt", self.dt),
            ("beta_x", self.beta_x),
            ("alpha_x", self.alpha_x),
            ("z0", self.z0),
            ("duration", self.duration),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

/// Phase `z₀ exp(−(α_z/τ) t)`, with `t` in seconds.
pub fn phase(t: f64, config: &DmpConfig) -> f64 {
    config.z0 * (-(config.alpha_z / config.tau) * t).exp()
}

/// RBF centers and widths spread evenly over the demonstration in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisGrid {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
}

impl BasisGrid {
    /// `cᵢ = z₀ exp(−(α_z/τ)(i·T/N))`, `hᵢ = N^1.5 / (cᵢ α_z)` for `i = 1..=N`.
    pub fn new(config: &DmpConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_basis as f64;
        let centers: Vec<f64> = (1..=config.n_basis).map(|i| phase(i as f64 * config.duration / n, config)).collect();
        let widths = centers.iter().map(|c| n.powf(1.5) / (c * config.alpha_z)).collect();
        Ok(Self { centers, widths })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Normalized activations `ψ(z)`, written into `out`.
    ///
    /// The exponents are shifted by their maximum before normalizing, so the
    /// activations stay a partition of unity even far outside the grid.
    pub fn activations_into(&self, z: f64, out: &mut Vec<f64>) -> Result<()> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::DegenerateBasis(z));
        }
        out.clear();
        out.extend(self.centers.iter().zip(&self.widths).map(|(c, h)| -h * (z - c) * (z - c)));
        let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for e in out.iter_mut() {
            *e = (*e - top).exp();
            sum += *e;
        }
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::DegenerateBasis(z));
        }
        for e in out.iter_mut() {
            *e /= sum;
        }
        Ok(())
    }
}

/// Normalized basis activations at phase `z`.
pub fn basis(z: f64, grid: &BasisGrid) -> Result<Vec<f64>> {
    let mut psi = Vec::with_capacity(grid.len());
    grid.activations_into(z, &mut psi)?;
    Ok(psi)
}

fn weighted(psi: &[f64], w: &[f64]) -> f64 {
    psi.iter().zip(w).map(|(p, w)| p * w).sum()
}

/// `(g − x₀) Σ ψᵢ(z) wᵢ z` for one position axis.
pub fn forcing_position(z: f64, w_row: &[f64], grid: &BasisGrid, g: f64, x0: f64) -> Result<f64> {
    let psi = basis(z, grid)?;
    Ok((g - x0) * weighted(&psi, w_row) * z)
}

/// `diag(log(g_o q̄)) Σ ψᵢ(z) wᵢ^o z`.
///
/// Skill rollouts evaluate the scale once, at the start orientation.
pub fn forcing_orientation(
    z: f64,
    w_o: &[Vec<f64>],
    grid: &BasisGrid,
    g_o: &UnitQuaternion,
    q: &UnitQuaternion,
) -> Result<Vector3<f64>> {
    let psi = basis(z, grid)?;
    let scale = goal_log(g_o, q);
    Ok(Vector3::from_fn(|j, _| scale[j] * weighted(&psi, &w_o[j]) * z))
}

/// `Σ ψᵢ(z) wᵢ^F` per wrench axis.
pub fn desired_force(z: f64, w_f: &[Vec<f64>], grid: &BasisGrid) -> Result<Wrench> {
    let psi = basis(z, grid)?;
    let mut a = [0.0; 6];
    for (j, row) in w_f.iter().enumerate().take(6) {
        a[j] = weighted(&psi, row);
    }
    Ok(Wrench::from_array(a))
}

/// `log(g_o q̄)` along the shortest arc.
pub(crate) fn goal_log(g_o: &UnitQuaternion, q: &UnitQuaternion) -> Vector3<f64> {
    quat::qlog(&quat::shortest(*g_o * q.conjugate())).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoSample {
    pub t: f64,
    pub pose: Pose,
    pub wrench: Wrench,
}

/// Time-ordered, uniformly sampled pose and wrench recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    samples: Vec<DemoSample>,
}

impl Demonstration {
    /// Validates sampling and sign-aligns the orientation sequence.
    pub fn new(mut samples: Vec<DemoSample>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(invalid(format!("demonstration needs at least 3 samples, got {}", samples.len())));
        }
        if let Some(bad) = samples.iter().position(|s| !s.pose.is_finite() || !s.wrench.is_finite() || !s.t.is_finite())
        {
            return Err(invalid(format!("non-finite value in sample {bad}")));
        }
        let span = samples.last().unwrap().t - samples[0].t;
        let mean = span / (samples.len() - 1) as f64;
        for (i, w) in samples.windows(2).enumerate() {
            let d = w[1].t - w[0].t;
            if !(d > 0.0) {
                return Err(invalid(format!("timestamps not strictly increasing at sample {}", i + 1)));
            }
            if (d - mean).abs() > 0.01 * mean {
                return Err(invalid(format!("non-uniform sample spacing at sample {}", i + 1)));
            }
        }
        let aligned = quat::sign_align(&samples.iter().map(|s| s.pose.q).collect::<Vec<_>>());
        for (s, q) in samples.iter_mut().zip(aligned) {
            s.pose.q = q;
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[DemoSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.duration() / (self.samples.len() - 1) as f64
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().t - self.samples[0].t
    }

    /// Per-axis extent (max − min) of the position samples.
    pub fn position_range(&self) -> Vector3<f64> {
        Vector3::from_fn(|j, _| {
            let (lo, hi) = self
                .samples
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.pose.p[j]), hi.max(s.pose.p[j])));
            hi - lo
        })
    }
}

/// A fitted skill: basis grid, weights and boundary poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpModel {
    pub config: DmpConfig,
    pub grid: BasisGrid,
    /// Position forcing weights, 3 rows of N.
    pub w_p: Vec<Vec<f64>>,
    /// Orientation forcing weights, 3 rows of N.
    pub w_o: Vec<Vec<f64>>,
    /// Wrench regression weights, 6 rows of N.
    pub w_f: Vec<Vec<f64>>,
    pub x0: Pose,
    pub g: Vector3<f64>,
    pub g_o: UnitQuaternion,
    /// Axes fit with unit forcing scale because `g ≈ x₀` there.
    pub unit_scale: [bool; 3],
    /// Rotation axes fit with unit scale because `log(g_o q̄₀) ≈ 0` there.
    pub unit_scale_o: [bool; 3],
}

impl DmpModel {
    /// Same skill retargeted to a new goal position.
    pub fn with_goal(&self, g: Vector3<f64>) -> Self {
        Self { g, ..self.clone() }
    }

    pub fn with_start(&self, x0: Pose) -> Self {
        Self { x0, ..self.clone() }
    }

    /// Forcing scale per position axis: `g − x₀`, or 1 on degenerate axes.
    pub fn position_scale(&self) -> Vector3<f64> {
        Vector3::from_fn(|j, _| if self.unit_scale[j] { 1.0 } else { self.g[j] - self.x0.p[j] })
    }

    /// Forcing scale per rotation axis: `log(g_o q̄₀)`, or 1 on degenerate axes.
    pub fn orientation_scale(&self) -> Vector3<f64> {
        let l = goal_log(&self.g_o, &self.x0.q);
        Vector3::from_fn(|j, _| if self.unit_scale_o[j] { 1.0 } else { l[j] })
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let n = self.config.n_basis;
        if self.grid.len() != n {
            return Err(invalid("basis grid size does not match config"));
        }
        let shapes = [(&self.w_p, 3, "w_p"), (&self.w_o, 3, "w_o"), (&self.w_f, 6, "w_f")];
        for (w, rows, name) in shapes {
            if w.len() != rows || w.iter().any(|r| r.len() != n) {
                return Err(invalid(format!("{name} must be {rows}x{n}")));
            }
            if w.iter().flatten().any(|x| !x.is_finite()) {
                return Err(invalid(format!("{name} has non-finite weights")));
            }
        }
        Ok(())
    }
}
