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

//! `vic`: demonstrate, fit, execute, train and evaluate contact skills in
//! simulation.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 episode ended in
//! the `error` state, 4 training diverged.

mod commands;
mod config;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "vic", version, about = "Variable-impedance contact skills in simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the configured subcommands.
#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a demonstration of the configured task.
    Demo {
        #[command(flatten)]
        common: Common,
    },
    /// Fit a movement primitive to the demonstration.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Number of basis functions.
        #[arg(long)]
        bfs: Option<usize>,
    },
    /// Execute the skill once with fixed gains or a policy and write a trace.
    Rollout {
        #[command(flatten)]
        common: Common,
        /// Fixture offset (mm).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        offset: f64,
        /// Policy document; without it the configured gains are used.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Train a stiffness policy.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from a checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Stop (and checkpoint) once this many steps have been taken.
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Success-rate table over seeded trials.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Fixture offsets (mm); repeat for several.
        #[arg(long, allow_negative_numbers = true)]
        offset: Vec<f64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Policy document to evaluate alongside the fixed-gain conditions.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Long-format `series,t,value` CSV from traces, demonstrations or curves.
    Plotdata {
        /// Input CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Comma-separated channel names (default: every numeric column).
        #[arg(long, value_delimiter = ',')]
        channels: Vec<String>,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_EPISODE: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn usage_from(e: vic_core::Error) -> Self {
        Self::usage(e.to_string())
    }

    pub fn episode(message: impl Into<String>) -> Self {
        Self { code: EXIT_EPISODE, message: message.into() }
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl From<vic_core::Error> for CliError {
    fn from(e: vic_core::Error) -> Self {
        match e {
            vic_core::Error::TrainingDivergence(_) => Self { code: EXIT_DIVERGED, message: e.to_string() },
            other => Self::usage(other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Demo { common } => commands::demo(&common),
        Command::Fit { common, bfs } => commands::fit(&common, bfs),
        Command::Rollout { common, offset, policy } => commands::rollout(&common, offset, policy.as_deref()),
        Command::Train { common, resume, max_steps } => commands::train(&common, resume.as_deref(), max_steps),
        Command::Eval { common, offset, trials, policy } => commands::eval(&common, &offset, trials, policy.as_deref()),
        Command::Plotdata { inputs, channels, out } => plot::plotdata(&inputs, &channels, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vic: {e}");
            ExitCode::from(e.code)
        }
    }
}
