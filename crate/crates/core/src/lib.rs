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

//! Contact-rich skill commissioning in simulation.
//!
//! The pipeline has three stages:
//!
//! 1. a demonstration (pose + wrench samples) is encoded as position,
//!    orientation and force dynamic movement primitives ([`dmp`]);
//! 2. the primitives are replayed through a 6-DOF admittance controller
//!    ([`admittance`]) against a penalty-contact world ([`env`]);
//! 3. a soft actor-critic agent ([`sac`]) learns to rewrite the controller
//!    stiffness online from the measured pose and wrench.
//!
//! Orientation math shared by all stages lives in [`quat`]; flat-file
//! formats (CSV trajectories and traces, JSON models) live in [`io`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admittance;
pub mod dmp;
pub mod env;
pub mod error;
pub mod io;
pub mod quat;
pub mod sac;

pub use admittance::{AdmittanceState, ImpedanceGains, Pose, Wrench};
pub use error::{Error, Result};
pub use quat::{RotVec, UnitQuaternion};
