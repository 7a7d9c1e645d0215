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

//! Penalty-contact worlds.
//!
//! Contact is evaluated at the TCP point. Penetration `δ` along the surface
//! normal produces a force `max(0, k·δ + d·δ̇)` along that normal, which is
//! then expressed in the TCP frame. Torques are zero.

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::admittance::{Pose, Wrench};
use crate::error::{invalid, Result};

pub const DEFAULT_K_ENV: f64 = 1e4;
pub const DEFAULT_D_ENV: f64 = 50.0;

/// Shape of the fixture the TCP can touch. Lengths are metres in the world
/// frame before `offset` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Geometry {
    FreeSpace,
    /// Half-space `z ≤ height`.
    #[serde(rename = "wall-1dof")]
    Wall {
        height: f64,
    },
    /// Plate with top face at `surface` and a vertical blind hole.
    PegInHole {
        surface: f64,
        center: [f64; 2],
        hole_radius: f64,
        peg_radius: f64,
        depth: f64,
    },
    /// Crowned tape strip running along `y` from `y_start` to an end fixture
    /// at `y_end`. The crown is a cylinder of radius `crown_radius` whose top
    /// line sits at height `surface`, rolled by `tilt` about the strip axis.
    /// Beside the strip the floor is `drop` lower. The fixture face at
    /// `y_end` rises `fixture_height` above the strip; the crown continues
    /// underneath it.
    TapeChannel {
        surface: f64,
        x_center: f64,
        half_width: f64,
        crown_radius: f64,
        tilt: f64,
        drop: f64,
        y_start: f64,
        y_end: f64,
        fixture_height: f64,
    },
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::FreeSpace => "free-space",
            Geometry::Wall { .. } => "wall-1dof",
            Geometry::PegInHole { .. } => "peg-in-hole",
            Geometry::TapeChannel { .. } => "tape-channel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactWorld {
    pub geometry: Geometry,
    pub k_env: f64,
    pub d_env: f64,
    /// Rigid displacement of the whole fixture.
    #[serde(default)]
    pub offset: Vector3<f64>,
}

/// One contact: penetration depth, its rate, and the outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Penetration {
    depth: f64,
    normal: Vector3<f64>,
}

impl ContactWorld {
    pub fn new(geometry: Geometry) -> Result<Self> {
        let w = Self { geometry, k_env: DEFAULT_K_ENV, d_env: DEFAULT_D_ENV, offset: Vector3::zeros() };
        w.validate()?;
        Ok(w)
    }

    pub fn with_offset(mut self, offset: Vector3<f64>) -> Self {
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_env > 0.0) || !(self.d_env >= 0.0) {
            return Err(invalid(format!(
                "contact needs k_env > 0 and d_env >= 0, got {} and {}",
                self.k_env, self.d_env
            )));
        }
        if self.offset.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite world offset"));
        }
        let positive = |xs: &[f64]| xs.iter().all(|x| *x > 0.0 && x.is_finite());
        let ok = match self.geometry {
            Geometry::FreeSpace => true,
            Geometry::Wall { height } => height.is_finite(),
            Geometry::PegInHole { surface, center, hole_radius, peg_radius, depth } => {
                surface.is_finite()
                    && center.iter().all(|c| c.is_finite())
                    && positive(&[hole_radius, peg_radius, depth])
                    && peg_radius < hole_radius
            }
            Geometry::TapeChannel {
                surface,
                x_center,
                half_width,
                crown_radius,
                tilt,
                drop,
                y_start,
                y_end,
                fixture_height,
            } => {
                surface.is_finite()
                    && x_center.is_finite()
                    && tilt.is_finite()
                    && tilt.abs() < std::f64::consts::FRAC_PI_4
                    && positive(&[half_width, crown_radius, drop, fixture_height])
                    && half_width < crown_radius
                    && y_start < y_end
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid {} geometry", self.geometry.name())))
        }
    }

    /// Contact wrench on the TCP at `pose` moving with linear velocity `v`
    /// (world frame), expressed in the TCP frame.
    pub fn contact_wrench(&self, pose: &Pose, v: &Vector3<f64>) -> Wrench {
        let p = pose.p - self.offset;
        let mut f = Vector3::zeros();
        for c in self.penetrations(&p).into_iter().flatten() {
            let rate = -v.dot(&c.normal);
            let mag = (self.k_env * c.depth + self.d_env * rate).max(0.0);
            f += c.normal * mag;
        }
        Wrench::new(pose.q.inverse_rotate(&f), Vector3::zeros())
    }

    /// Whether `p` penetrates the main contact surface (wall face, plate,
    /// hole, or tape crown; the floor beside the tape does not count).
    pub fn touches_task_surface(&self, p: &Vector3<f64>) -> bool {
        let p = p - self.offset;
        match self.geometry {
            Geometry::TapeChannel { .. } => self.tape_crown(&p).is_some(),
            _ => self.penetrations(&p).iter().flatten().next().is_some(),
        }
    }

    fn penetrations(&self, p: &Vector3<f64>) -> [Option<Penetration>; 2] {
        match self.geometry {
            Geometry::FreeSpace => [None, None],
            Geometry::Wall { height } => [below(height - p.z, Vector3::z()), None],
            Geometry::PegInHole { surface, center, hole_radius, peg_radius, depth } => {
                let radial = Vector2::new(p.x - center[0], p.y - center[1]);
                let rho = radial.norm();
                let clearance = hole_radius - peg_radius;
                let top = surface - p.z;
                if top <= 0.0 {
                    return [None, None];
                }
                let outward = if rho > 1e-12 { radial / rho } else { Vector2::x() };
                let inward = Vector3::new(-outward.x, -outward.y, 0.0);
                let side = rho - clearance;
                if side <= 0.0 {
                    // inside the hole: only the bottom can touch
                    return [below(top - depth, Vector3::z()), None];
                }
                if top < side {
                    // resting on the plate
                    [below(top, Vector3::z()), None]
                } else {
                    // pressed against the hole wall
                    [below(side, inward), below(top - depth, Vector3::z())]
                }
            }
            Geometry::TapeChannel { surface, drop, y_end, fixture_height, .. } => {
                let fixture = if p.z < surface + fixture_height { below(p.y - y_end, -Vector3::y()) } else { None };
                let base = match self.tape_crown(p) {
                    Some(c) => Some(c),
                    None if self.over_strip(p) => None,
                    None => below(surface - drop - p.z, Vector3::z()),
                };
                [base, fixture]
            }
        }
    }

    fn over_strip(&self, p: &Vector3<f64>) -> bool {
        match self.geometry {
            Geometry::TapeChannel { x_center, half_width, y_start, .. } => {
                (p.x - x_center).abs() <= half_width && p.y >= y_start
            }
            _ => false,
        }
    }

    fn tape_crown(&self, p: &Vector3<f64>) -> Option<Penetration> {
        let Geometry::TapeChannel { surface, x_center, crown_radius, tilt, .. } = self.geometry else {
            return None;
        };
        if !self.over_strip(p) {
            return None;
        }
        // cylinder axis lies crown_radius below the top line, rolled by tilt
        let (s, c) = tilt.sin_cos();
        let axis = Vector2::new(x_center + crown_radius * s, surface - crown_radius * c);
        let r = Vector2::new(p.x, p.z) - axis;
        let dist = r.norm();
        if dist < 1e-12 {
            return None;
        }
        let n = r / dist;
        // only the upper face of the crown is a contact surface
        if n.y <= 0.0 {
            return None;
        }
        below(crown_radius - dist, Vector3::new(n.x, 0.0, n.y))
    }
}

fn below(depth: f64, normal: Vector3<f64>) -> Option<Penetration> {
    (depth > 0.0).then_some(Penetration { depth, normal })
}

/// Per-trial fixture perturbation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub shift: Vector3<f64>,
    pub tilt: f64,
}

/// Standard deviations of the per-trial perturbation and sensor noise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Randomization {
    /// Fixture shift along `x`, `y`, `z` (m).
    pub shift_sd: [f64; 3],
    /// Tape roll about its axis (rad).
    pub tilt_sd: f64,
    /// Additive noise on each measured force component (N).
    pub force_noise_sd: f64,
}

impl Randomization {
    pub fn validate(&self) -> Result<()> {
        let all = self.shift_sd.iter().chain([&self.tilt_sd, &self.force_noise_sd]);
        if all.into_iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(invalid("randomization deviations must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Perturbation {
        let mut gauss = |sd: f64| if sd > 0.0 { Normal::new(0.0, sd).unwrap().sample(rng) } else { 0.0 };
        let shift = Vector3::new(gauss(self.shift_sd[0]), gauss(self.shift_sd[1]), gauss(self.shift_sd[2]));
        // keep the roll inside the valid geometry range
        let tilt = gauss(self.tilt_sd).clamp(-0.7, 0.7);
        Perturbation { shift, tilt }
    }
}

impl ContactWorld {
    /// This world with a trial perturbation applied.
    pub fn perturbed(&self, p: &Perturbation) -> Self {
        let mut w = *self;
        w.offset += p.shift;
        if let Geometry::TapeChannel { ref mut tilt, .. } = w.geometry {
            *tilt += p.tilt;
        }
        w
    }
}
