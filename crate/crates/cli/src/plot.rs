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

//! Long-format plot data from the CSV files the other commands write.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use vic_core::io::{self, CURVE_HEADER, TRACE_HEADER, TRAJECTORY_HEADER};

use crate::CliError;

/// Norm of `F_ext − F_d`, available for traces.
pub const FORCE_ERROR: &str = "force_error";

/// A parsed input: its time column and named numeric channels.
struct Table {
    label: String,
    time: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    fn channel(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

fn schema_error(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::usage(format!("{}: {msg}", path.display()))
}

fn read_table(path: &Path, label: String) -> Result<Table, CliError> {
    let mut rdr = csv::Reader::from_reader(io::open(path)?);
    let header: Vec<String> = rdr.headers().map_err(|e| schema_error(path, e))?.iter().map(String::from).collect();
    let known = [&TRACE_HEADER[..], &TRAJECTORY_HEADER[..], &CURVE_HEADER[..]];
    if !known.iter().any(|h| h.iter().eq(header.iter())) {
        return Err(schema_error(path, format!("unrecognized header '{}'", header.join(","))));
    }
    let numeric: Vec<usize> = (0..header.len()).filter(|&i| header[i] != "status").collect();
    let mut data = vec![Vec::new(); header.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema_error(path, e))?;
        if rec.len() != header.len() {
            return Err(schema_error(path, "ragged row"));
        }
        for &i in &numeric {
            let v: f64 = rec[i].trim().parse().map_err(|_| schema_error(path, format!("bad number '{}'", &rec[i])))?;
            data[i].push(v);
        }
    }
    let mut columns: Vec<(String, Vec<f64>)> =
        numeric.iter().map(|&i| (header[i].clone(), std::mem::take(&mut data[i]))).collect();
    let time_name = if header[0] == "step" { "step" } else { "t" };
    let pos = columns.iter().position(|(n, _)| n == time_name).expect("known header has a time column");
    let (_, mut time) = columns.remove(pos);
    if let Some(&t0) = time.first() {
        if time_name == "t" {
            time.iter_mut().for_each(|t| *t -= t0);
        }
    }
    let mut table = Table { label, time, columns };
    if header.iter().eq(TRACE_HEADER.iter()) {
        let err: Vec<f64> = (0..table.time.len())
            .map(|k| {
                let c = |n: &str| table.channel(n).expect("trace column")[k];
                let d = [c("fx") - c("fdx"), c("fy") - c("fdy"), c("fz") - c("fdz")];
                d.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .collect();
        table.columns.push((FORCE_ERROR.into(), err));
    }
    Ok(table)
}

/// Labels from file stems, made unique by a numeric suffix.
fn labels(inputs: &[PathBuf]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    inputs
        .iter()
        .map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
            let mut label = stem.clone();
            let mut n = 2;
            while !seen.insert(label.clone()) {
                label = format!("{stem}#{n}");
                n += 1;
            }
            label
        })
        .collect()
}

pub fn plotdata(inputs: &[PathBuf], channels: &[String], out: &Path) -> Result<(), CliError> {
    let tables = inputs.iter().zip(labels(inputs)).map(|(p, l)| read_table(p, l)).collect::<Result<Vec<_>, _>>()?;
    let mut series = 0;
    io::save(out, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["series", "t", "value"])?;
        for (table, path) in tables.iter().zip(inputs) {
            let wanted: Vec<&str> = if channels.is_empty() {
                table.columns.iter().map(|(n, _)| n.as_str()).collect()
            } else {
                channels.iter().map(String::as_str).collect()
            };
            for name in wanted {
                let Some(values) = table.channel(name) else {
                    return Err(vic_core::Error::Parse(format!("{}: no channel '{name}'", path.display())));
                };
                let id = format!("{}/{name}", table.label);
                for (t, v) in table.time.iter().zip(values) {
                    wtr.write_record([id.as_str(), &format!("{t}"), &format!("{v}")])?;
                }
                series += 1;
            }
        }
        wtr.flush()?;
        Ok(())
    })
    .map_err(|e| match e {
        vic_core::Error::Parse(m) => CliError::usage(m),
        other => other.into(),
    })?;
    println!("wrote {}: {series} series", out.display());
    Ok(())
}
