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

//! Flat-file formats.
//!
//! Trajectories, episode traces and learning curves are CSV with a fixed
//! header; models, policies and checkpoints are JSON documents. Floats are
//! written in shortest round-trip form, so every format reads back bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::admittance::{Pose, Stiffness, Wrench};
use crate::dmp::{DemoSample, Demonstration};
use crate::env::Episode;
use crate::error::{Error, Result};
use crate::quat::{Quaternion, UnitQuaternion, ZERO_TOL};
use crate::sac::reward::EpisodeStatus;
use crate::sac::train::CurvePoint;

pub const TRAJECTORY_HEADER: [&str; 14] =
    ["t", "px", "py", "pz", "qw", "qx", "qy", "qz", "fx", "fy", "fz", "mx", "my", "mz"];

pub const TRACE_HEADER: [&str; 28] = [
    "t", "px", "py", "pz", "qw", "qx", "qy", "qz", "fx", "fy", "fz", "mx", "my", "mz", "fdx", "fdy", "fdz", "mdx",
    "mdy", "mdz", "kx", "ky", "kz", "krx", "kry", "krz", "reward", "status",
];

pub const CURVE_HEADER: [&str; 3] = ["step", "mean_return", "success_rate"];

/// One policy step of an executed episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub pose: Pose,
    pub wrench: Wrench,
    pub desired: Wrench,
    pub stiffness: Stiffness,
    pub reward: f64,
    pub status: EpisodeStatus,
}

impl TraceRow {
    /// Current state of `ep` together with the reward of the step that led here.
    pub fn capture(ep: &Episode, reward: f64) -> Self {
        let m = ep.measurement();
        Self {
            t: ep.time(),
            pose: m.pose,
            wrench: m.wrench,
            desired: ep.reference_sample().wrench,
            stiffness: *ep.stiffness(),
            reward,
            status: ep.status(),
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn pose_fields(p: &Pose) -> impl Iterator<Item = f64> {
    let q = p.q.wxyz();
    [p.p.x, p.p.y, p.p.z, q[0], q[1], q[2], q[3]].into_iter()
}

fn csv_writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

/// Reads all records after checking the header matches `header` exactly.
fn csv_records<R: Read>(r: R, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let got = rdr.headers()?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected header '{}', expected '{}'",
            got.iter().collect::<Vec<_>>().join(","),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?);
    }
    Ok(rows)
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| Error::Parse(format!("missing column {i}")))?;
    s.trim().parse().map_err(|_| Error::Parse(format!("bad value '{s}' in column {i}")))
}

fn floats(rec: &csv::StringRecord, start: usize, n: usize) -> Result<Vec<f64>> {
    (start..start + n).map(|i| field(rec, i)).collect()
}

fn line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Quaternion columns must be unit within this tolerance.
pub const UNIT_TOL: f64 = 1e-6;

fn parse_pose(v: &[f64]) -> Result<Pose> {
    let raw = Quaternion::new(v[3], Vector3::new(v[4], v[5], v[6]));
    let n = raw.norm();
    if !((n - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::Parse(format!("quaternion norm {n} is not 1")));
    }
    // Stored values are already unit to rounding; keep their bits.
    let q = if (n - 1.0).abs() <= ZERO_TOL {
        UnitQuaternion::from_unit_parts(raw.v, raw.u)
    } else {
        UnitQuaternion::try_from(raw)?
    };
    Ok(Pose::new(Vector3::new(v[0], v[1], v[2]), q))
}

fn parse_wrench(v: &[f64]) -> Wrench {
    Wrench::from_array([v[0], v[1], v[2], v[3], v[4], v[5]])
}

pub fn write_demonstration<W: Write>(w: W, demo: &Demonstration) -> Result<()> {
    let mut out = csv_writer(w, &TRAJECTORY_HEADER)?;
    for s in demo.samples() {
        let row = std::iter::once(s.t).chain(pose_fields(&s.pose)).chain(s.wrench.to_array());
        out.write_record(row.map(fmt))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_demonstration<R: Read>(r: R) -> Result<Demonstration> {
    let mut samples = Vec::new();
    for rec in csv_records(r, &TRAJECTORY_HEADER)? {
        if rec.len() != TRAJECTORY_HEADER.len() {
            return Err(Error::Parse(format!("line {}: expected {} columns", line(&rec), TRAJECTORY_HEADER.len())));
        }
        let v = floats(&rec, 0, 14)?;
        let pose = parse_pose(&v[1..8]).map_err(|e| Error::Parse(format!("line {}: {e}", line(&rec))))?;
        samples.push(DemoSample { t: v[0], pose, wrench: parse_wrench(&v[8..14]) });
    }
    Demonstration::new(samples)
}

pub fn write_trace<W: Write>(w: W, rows: &[TraceRow]) -> Result<()> {
    let mut out = csv_writer(w, &TRACE_HEADER)?;
    for r in rows {
        let nums = std::iter::once(r.t)
            .chain(pose_fields(&r.pose))
            .chain(r.wrench.to_array())
            .chain(r.desired.to_array())
            .chain(r.stiffness.iter().copied())
            .chain(std::iter::once(r.reward))
            .map(fmt);
        let rec: Vec<String> = nums.chain(std::iter::once(r.status.to_string())).collect();
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for rec in csv_records(r, &TRACE_HEADER)? {
        if rec.len() != TRACE_HEADER.len() {
            return Err(Error::Parse(format!("line {}: expected {} columns", line(&rec), TRACE_HEADER.len())));
        }
        let v = floats(&rec, 0, 27)?;
        let status: EpisodeStatus = field(&rec, 27)?;
        rows.push(TraceRow {
            t: v[0],
            pose: parse_pose(&v[1..8]).map_err(|e| Error::Parse(format!("line {}: {e}", line(&rec))))?,
            wrench: parse_wrench(&v[8..14]),
            desired: parse_wrench(&v[14..20]),
            stiffness: Stiffness::from_column_slice(&v[20..26]),
            reward: v[26],
            status,
        });
    }
    Ok(rows)
}

pub fn write_curve<W: Write>(w: W, curve: &[CurvePoint]) -> Result<()> {
    let mut out = csv_writer(w, &CURVE_HEADER)?;
    for p in curve {
        out.write_record([p.step.to_string(), fmt(p.mean_return), fmt(p.success_rate)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_curve<R: Read>(r: R) -> Result<Vec<CurvePoint>> {
    csv_records(r, &CURVE_HEADER)?
        .iter()
        .map(|rec| Ok(CurvePoint { step: field(rec, 0)?, mean_return: field(rec, 1)?, success_rate: field(rec, 2)? }))
        .collect()
}

/// Pretty-printed JSON document.
pub fn write_json<W: Write, T: Serialize>(w: W, value: &T) -> Result<()> {
    let mut w = BufWriter::new(w);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<R: Read, T: DeserializeOwned>(r: R) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(r))?)
}

/// Creates (or truncates) `path` and hands a buffered writer to `f`.
pub fn save<P: AsRef<Path>>(path: P, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_context(e, path))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn open<P: AsRef<Path>>(path: P) -> Result<BufReader<File>> {
    let path = path.as_ref();
    Ok(BufReader::new(File::open(path).map_err(|e| io_context(e, path))?))
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}
