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

//! Discrete-time Cartesian admittance control.
//!
//! The controller renders `M ẍ_e + D ẋ_e + K x_e = F_ext − F_d` per axis in
//! the TCP frame. Linear axes act on the position error `x_e`; angular axes
//! act on `2·log(q_e)`. The commanded pose is `X_c = X_d X_e`.

use std::ops::{Add, Sub};

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quat::{self, UnitQuaternion};

/// Linear stiffness limits (N/m).
pub const K_P_MIN: f64 = 20.0;
pub const K_P_MAX: f64 = 2000.0;
/// Orientation stiffness limits (N·m/rad).
pub const K_O_MIN: f64 = 1.0;
pub const K_O_MAX: f64 = 40.0;
/// Largest stiffness change accepted per policy update.
pub const K_P_MAX_STEP: f64 = 40.0;
pub const K_O_MAX_STEP: f64 = 1.0;

pub const DEFAULT_LINEAR_MASS: f64 = 5.0;
pub const DEFAULT_ANGULAR_INERTIA: f64 = 0.02;

/// Semi-implicit Euler substeps per controller tick.
pub const SUBSTEPS: usize = 10;
/// Largest controller period accepted by [`step`].
pub const MAX_DT: f64 = 0.01;

/// Stiffness as `[K^p_x, K^p_y, K^p_z, K^o_x, K^o_y, K^o_z]`.
pub type Stiffness = Vector6<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub p: Vector3<f64>,
    pub q: UnitQuaternion,
}

impl Pose {
    pub fn new(p: Vector3<f64>, q: UnitQuaternion) -> Self {
        Self { p, q }
    }

    pub fn from_position(p: Vector3<f64>) -> Self {
        Self { p, q: UnitQuaternion::identity() }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().all(|c| c.is_finite()) && self.q.is_finite()
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::from_position(Vector3::zeros())
    }
}

/// Force (N) and torque (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub f: Vector3<f64>,
    pub m: Vector3<f64>,
}

impl Wrench {
    pub fn new(f: Vector3<f64>, m: Vector3<f64>) -> Self {
        Self { f, m }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { f: Vector3::new(a[0], a[1], a[2]), m: Vector3::new(a[3], a[4], a[5]) }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.f.x, self.f.y, self.f.z, self.m.x, self.m.y, self.m.z]
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().chain(self.m.iter()).all(|c| c.is_finite())
    }
}

impl Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.f + rhs.f, self.m + rhs.m)
    }
}

impl Sub for Wrench {
    type Output = Wrench;

    fn sub(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.f - rhs.f, self.m - rhs.m)
    }
}

/// `2·ζ·√(M·K)` per axis.
pub fn damping_from(mass: &[f64], stiffness: &[f64], zeta: f64) -> Result<Vec<f64>> {
    if mass.len() != stiffness.len() {
        return Err(invalid("mass and stiffness lengths differ"));
    }
    if !(zeta > 0.0) {
        return Err(invalid(format!("damping ratio must be positive, got {zeta}")));
    }
    mass.iter()
        .zip(stiffness)
        .map(|(&m, &k)| {
            if m > 0.0 && k > 0.0 {
                Ok(2.0 * zeta * (m * k).sqrt())
            } else {
                Err(invalid(format!("mass {m} and stiffness {k} must be positive")))
            }
        })
        .collect()
}

/// Diagonal mass/stiffness/damping of the rendered system.
///
/// Damping is derived from the other three and recomputed whenever the
/// stiffness is replaced, so it always stays at the configured ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceGains {
    m_p: Vector3<f64>,
    m_o: Vector3<f64>,
    k: Stiffness,
    zeta: f64,
    d: Vector6<f64>,
}

impl ImpedanceGains {
    /// Gains with the default inertia and critical damping.
    pub fn new(k_p: Vector3<f64>, k_o: Vector3<f64>) -> Result<Self> {
        Self::with_inertia(
            Vector3::repeat(DEFAULT_LINEAR_MASS),
            Vector3::repeat(DEFAULT_ANGULAR_INERTIA),
            stack(&k_p, &k_o),
            1.0,
        )
    }

    /// Uniform gains, e.g. `uniform(605.0, 13.0)`.
    pub fn uniform(k_p: f64, k_o: f64) -> Result<Self> {
        Self::new(Vector3::repeat(k_p), Vector3::repeat(k_o))
    }

    /// Stiffness is checked against the admissible range.
    pub fn with_inertia(m_p: Vector3<f64>, m_o: Vector3<f64>, k: Stiffness, zeta: f64) -> Result<Self> {
        if let Some(i) = (0..6).find(|&i| !in_range(i, k[i])) {
            return Err(invalid(format!("stiffness {} on axis {i} outside admissible range", k[i])));
        }
        let mut gains = Self { m_p, m_o, k, zeta, d: Vector6::zeros() };
        gains.recompute_damping()?;
        Ok(gains)
    }

    /// Gains whose stiffness is first clamped into the admissible range.
    pub fn saturating(k: Stiffness) -> Self {
        let k = clamp_to_range(&k);
        Self::with_inertia(Vector3::repeat(DEFAULT_LINEAR_MASS), Vector3::repeat(DEFAULT_ANGULAR_INERTIA), k, 1.0)
            .expect("clamped stiffness is admissible")
    }

    /// Mid-range stiffness used at episode start.
    pub fn middle() -> Self {
        Self::uniform(605.0, 13.0).expect("mid-range gains are admissible")
    }

    pub fn stiffness(&self) -> &Stiffness {
        &self.k
    }

    pub fn damping(&self) -> &Vector6<f64> {
        &self.d
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn linear_mass(&self) -> &Vector3<f64> {
        &self.m_p
    }

    pub fn angular_inertia(&self) -> &Vector3<f64> {
        &self.m_o
    }

    pub fn set_stiffness(&mut self, k: Stiffness) -> Result<()> {
        if let Some(i) = (0..6).find(|&i| !in_range(i, k[i])) {
            return Err(invalid(format!("stiffness {} on axis {i} outside admissible range", k[i])));
        }
        self.k = k;
        self.recompute_damping()
    }

    fn recompute_damping(&mut self) -> Result<()> {
        let mass: Vec<f64> = self.m_p.iter().chain(self.m_o.iter()).copied().collect();
        let d = damping_from(&mass, self.k.as_slice(), self.zeta)?;
        self.d = Vector6::from_column_slice(&d);
        Ok(())
    }
}

fn stack(p: &Vector3<f64>, o: &Vector3<f64>) -> Stiffness {
    Stiffness::new(p.x, p.y, p.z, o.x, o.y, o.z)
}

fn in_range(axis: usize, k: f64) -> bool {
    let (lo, hi) = if axis < 3 { (K_P_MIN, K_P_MAX) } else { (K_O_MIN, K_O_MAX) };
    k >= lo && k <= hi
}

fn clamp_to_range(k: &Stiffness) -> Stiffness {
    Stiffness::from_fn(|i, _| if i < 3 { k[i].clamp(K_P_MIN, K_P_MAX) } else { k[i].clamp(K_O_MIN, K_O_MAX) })
}

/// Range-clamps the requested stiffness, then limits the change from
/// `k_prev` to the per-update rate bound.
pub fn clamp_gains(k_prev: &Stiffness, k_req: &Stiffness) -> Stiffness {
    let ranged = clamp_to_range(k_req);
    Stiffness::from_fn(|i, _| {
        let step = if i < 3 { K_P_MAX_STEP } else { K_O_MAX_STEP };
        ranged[i].clamp(k_prev[i] - step, k_prev[i] + step)
    })
}

/// Pose error state of the rendered mass-spring-damper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceState {
    pub x_e_p: Vector3<f64>,
    pub q_e: UnitQuaternion,
    pub v_e: Vector3<f64>,
    pub w_e: Vector3<f64>,
}

impl Default for AdmittanceState {
    fn default() -> Self {
        Self { x_e_p: Vector3::zeros(), q_e: UnitQuaternion::identity(), v_e: Vector3::zeros(), w_e: Vector3::zeros() }
    }
}

impl AdmittanceState {
    pub fn is_finite(&self) -> bool {
        self.x_e_p.iter().chain(self.v_e.iter()).chain(self.w_e.iter()).all(|c| c.is_finite()) && self.q_e.is_finite()
    }

    /// Angular displacement `2·log(q_e)` the orientation spring acts on.
    pub fn angular_displacement(&self) -> Vector3<f64> {
        quat::qlog(&quat::shortest(self.q_e)).0 * 2.0
    }
}

/// Advances the controller by one tick of length `dt`.
///
/// The wrench inputs are held over the tick, which is integrated with
/// [`SUBSTEPS`] semi-implicit Euler substeps.
pub fn step(
    state: &AdmittanceState,
    gains: &ImpedanceGains,
    f_ext: &Wrench,
    f_d: &Wrench,
    dt: f64,
) -> Result<AdmittanceState> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(invalid(format!("controller period {dt} outside (0, {MAX_DT}]")));
    }
    if !f_ext.is_finite() || !f_d.is_finite() {
        return Err(invalid("non-finite wrench"));
    }
    let load = *f_ext - *f_d;
    let h = dt / SUBSTEPS as f64;
    let k = gains.stiffness();
    let d = gains.damping();
    let mut s = *state;
    for _ in 0..SUBSTEPS {
        for i in 0..3 {
            let a = (load.f[i] - d[i] * s.v_e[i] - k[i] * s.x_e_p[i]) / gains.m_p[i];
            s.v_e[i] += a * h;
            s.x_e_p[i] += s.v_e[i] * h;
        }
        let theta = s.angular_displacement();
        for i in 0..3 {
            let alpha = (load.m[i] - d[i + 3] * s.w_e[i] - k[i + 3] * theta[i]) / gains.m_o[i];
            s.w_e[i] += alpha * h;
        }
        s.q_e = quat::integrate_orientation(&s.q_e, &s.w_e, h);
    }
    Ok(s)
}

/// `X_c = X_d X_e`: the error transform is expressed in the desired TCP frame.
pub fn commanded_pose(x_d: &Pose, state: &AdmittanceState) -> Pose {
    Pose { p: x_d.p + x_d.q.rotate(&state.x_e_p), q: x_d.q * state.q_e }
}
