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

//! Unit quaternions and the log/exp maps between orientations and 3-vectors.
//!
//! Conventions: `log(q)` returns the *half* rotation vector (`θ/2 · axis`),
//! so angular velocity is `ω = 2/Δt · log(q₊ * conj(q))` and a rotation by
//! `ω` over `Δt` is `exp(ω Δt / 2) * q`. The types carry no sign convention;
//! trajectory code calls [`sign_align`] before differentiating.

use std::fmt;
use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Below this norm a vector part (or rotation vector) is treated as zero.
pub const ZERO_TOL: f64 = 1e-12;
/// Below this norm `sin(x)/x` switches to its Taylor expansion.
const TAYLOR_TOL: f64 = 1e-6;

/// A general quaternion `v + u`, not necessarily of unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub v: f64,
    pub u: Vector3<f64>,
}

impl Quaternion {
    pub fn new(v: f64, u: Vector3<f64>) -> Self {
        Self { v, u }
    }

    pub fn norm(&self) -> f64 {
        (self.v * self.v + self.u.norm_squared()).sqrt()
    }

    pub fn conjugate(&self) -> Self {
        Self { v: self.v, u: -self.u }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.v * other.v + self.u.dot(&other.u)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        Quaternion { v: self.v * rhs.v - self.u.dot(&rhs.u), u: self.v * rhs.u + rhs.v * self.u + self.u.cross(&rhs.u) }
    }
}

/// Norm of an arbitrary quaternion `v + u`.
pub fn norm(q: &Quaternion) -> f64 {
    q.norm()
}

/// Rotation vector in the quaternion-log convention (half-angle scaled axis).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotVec(pub Vector3<f64>);

impl RotVec {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Quaternion on the unit sphere S³.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Quaternion", into = "Quaternion")]
pub struct UnitQuaternion(Quaternion);

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self(Quaternion::new(1.0, Vector3::zeros()))
    }

    /// Normalizes `v + u`. Fails on a (near) zero quaternion or non-finite input.
    pub fn new(v: f64, u: Vector3<f64>) -> Result<Self> {
        Self::try_from(Quaternion::new(v, u))
    }

    /// Wraps parts the caller already knows to be unit length.
    pub(crate) fn from_unit_parts(v: f64, u: Vector3<f64>) -> Self {
        Self(Quaternion::new(v, u))
    }

    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(w, Vector3::new(x, y, z))
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n < ZERO_TOL {
            return Self::identity();
        }
        let half = 0.5 * angle;
        Self::from_unit_parts(half.cos(), axis * (half.sin() / n))
    }

    pub fn v(&self) -> f64 {
        self.0.v
    }

    pub fn u(&self) -> &Vector3<f64> {
        &self.0.u
    }

    pub fn as_quaternion(&self) -> &Quaternion {
        &self.0
    }

    pub fn wxyz(&self) -> [f64; 4] {
        [self.0.v, self.0.u.x, self.0.u.y, self.0.u.z]
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.conjugate())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.dot(&other.0)
    }

    /// Renormalizes to remove accumulated rounding drift.
    pub fn renormalize(self) -> Self {
        let n = self.0.norm();
        Self(Quaternion::new(self.0.v / n, self.0.u / n))
    }

    pub fn log(&self) -> RotVec {
        qlog(self)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.0.v, self.0.u.x, self.0.u.y, self.0.u.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Rotates `p` by this quaternion (`q p q̄`).
    pub fn rotate(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let t = 2.0 * self.0.u.cross(p);
        p + self.0.v * t + self.0.u.cross(&t)
    }

    /// Inverse rotation (`q̄ p q`).
    pub fn inverse_rotate(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.conjugate().rotate(p)
    }

    pub fn is_finite(&self) -> bool {
        self.0.v.is_finite() && self.0.u.iter().all(|c| c.is_finite())
    }
}

impl TryFrom<Quaternion> for UnitQuaternion {
    type Error = crate::Error;

    fn try_from(q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if !n.is_finite() || n < ZERO_TOL {
            return Err(invalid(format!("cannot normalize quaternion of norm {n}")));
        }
        Ok(Self(Quaternion::new(q.v / n, q.u / n)))
    }
}

impl From<UnitQuaternion> for Quaternion {
    fn from(q: UnitQuaternion) -> Self {
        q.0
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Debug for UnitQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnitQuaternion({}, [{}, {}, {}])", self.0.v, self.0.u.x, self.0.u.y, self.0.u.z)
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        multiply(&self, &rhs)
    }
}

impl Neg for UnitQuaternion {
    type Output = UnitQuaternion;

    fn neg(self) -> UnitQuaternion {
        Self(Quaternion::new(-self.0.v, -self.0.u))
    }
}

pub fn multiply(q1: &UnitQuaternion, q2: &UnitQuaternion) -> UnitQuaternion {
    UnitQuaternion(q1.0 * q2.0).renormalize()
}

pub fn conjugate(q: &UnitQuaternion) -> UnitQuaternion {
    q.conjugate()
}

/// Quaternion logarithm: `arccos(v) · u/‖u‖`, or zero when `‖u‖` vanishes.
///
/// `arccos(v)` is evaluated as `atan2(‖u‖, v)`, which is the same function on
/// the unit sphere but keeps full precision near the identity.
pub fn qlog(q: &UnitQuaternion) -> RotVec {
    let n = q.u().norm();
    if n < ZERO_TOL {
        return RotVec::zero();
    }
    let angle = n.atan2(q.v());
    RotVec(q.u() * (angle / n))
}

/// Exponential map: `cos‖r‖ + sin‖r‖ · r/‖r‖`, identity for `r = 0`.
pub fn qexp(r: &RotVec) -> UnitQuaternion {
    let n = r.norm();
    if n < ZERO_TOL {
        return UnitQuaternion::identity();
    }
    let sinc = if n < TAYLOR_TOL { 1.0 - n * n / 6.0 } else { n.sin() / n };
    UnitQuaternion::from_unit_parts(n.cos(), r.0 * sinc).renormalize()
}

/// Angular velocity that carries `q_now` into `q_next` within `dt`.
pub fn angular_velocity(q_next: &UnitQuaternion, q_now: &UnitQuaternion, dt: f64) -> Result<Vector3<f64>> {
    if !(dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let rel = *q_next * q_now.conjugate();
    Ok(qlog(&rel).0 * (2.0 / dt))
}

/// Advances `q` by a constant angular velocity `omega` held for `dt`.
pub fn integrate_orientation(q: &UnitQuaternion, omega: &Vector3<f64>, dt: f64) -> UnitQuaternion {
    let step = qexp(&RotVec(omega * (0.5 * dt)));
    multiply(&step, q)
}

/// Geodesic orientation error in radians, with the `2π` branch at `q q̄_d = -1`.
pub fn orientation_error(q: &UnitQuaternion, q_d: &UnitQuaternion) -> f64 {
    let rel = *q * q_d.conjugate();
    if (rel.v() + 1.0).abs() < 1e-9 && rel.u().norm() < 1e-9 {
        return 2.0 * std::f64::consts::PI;
    }
    2.0 * qlog(&rel).norm()
}

/// Flips signs so consecutive quaternions lie in the same hemisphere.
pub fn sign_align(seq: &[UnitQuaternion]) -> Vec<UnitQuaternion> {
    let mut out: Vec<UnitQuaternion> = Vec::with_capacity(seq.len());
    for q in seq {
        let next = match out.last() {
            Some(prev) if prev.dot(q) < 0.0 => -*q,
            _ => *q,
        };
        out.push(next);
    }
    out
}

/// Shortest-path representative of `q` (non-negative scalar part).
pub fn shortest(q: UnitQuaternion) -> UnitQuaternion {
    if q.v() < 0.0 {
        -q
    } else {
        q
    }
}
