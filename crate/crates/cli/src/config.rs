use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use lll_phase::fixtures::Model;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Nodes,
    Evolve,
    Velocity,
    Duality,
    Scatter,
    Packet,
    Classical,
    Density,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Named fixture or `custom` (samples read from `--samples`).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Named(Model),
    Custom,
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "custom" {
            return Ok(ModelChoice::Custom);
        }
        s.parse::<Model>()
            .map(ModelChoice::Named)
            .map_err(|_| format!("expected harper, saddle, free, tilted, harmonic or custom, got {s:?}"))
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelChoice::Named(m) => write!(f, "{m}"),
            ModelChoice::Custom => f.write_str("custom"),
        }
    }
}

/// Initial state for commands that need one.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateChoice {
    /// `eigen:K`, the K-th level counted from the bottom.
    Eigen(usize),
    /// `superpose:I,J`, equal-weight sum of two levels.
    Superpose(usize, usize),
    /// `random`, drawn from `--seed`.
    Random,
    /// `packet:X,P`, wrapped coherent packet.
    Packet(f64, f64),
}

impl FromStr for StateChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected eigen:K, superpose:I,J, random or packet:X,P, got {s:?}");
        if s == "random" {
            return Ok(StateChoice::Random);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(',').collect();
        match (kind, parts.as_slice()) {
            ("eigen", [k]) => k.parse().map(StateChoice::Eigen).map_err(|_| bad()),
            ("superpose", [i, j]) => match (i.parse(), j.parse()) {
                (Ok(i), Ok(j)) => Ok(StateChoice::Superpose(i, j)),
                _ => Err(bad()),
            },
            ("packet", [x, p]) => match (x.parse::<f64>(), p.parse::<f64>()) {
                (Ok(x), Ok(p)) if x.is_finite() && p.is_finite() => Ok(StateChoice::Packet(x, p)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for StateChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateChoice::Eigen(k) => write!(f, "eigen:{k}"),
            StateChoice::Superpose(i, j) => write!(f, "superpose:{i},{j}"),
            StateChoice::Random => f.write_str("random"),
            StateChoice::Packet(x, p) => write!(f, "packet:{x},{p}"),
        }
    }
}

/// Phase-space experiments on the lowest-Landau-level torus.
#[derive(Clone, Debug, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "lll-phase", version, allow_negative_numbers = true)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,

    /// Hilbert-space dimension (flux quanta).
    #[arg(long = "N", default_value_t = 16)]
    #[serde(rename = "N")]
    pub n: usize,

    /// Phase per position winding.
    #[arg(long, default_value_t = 0.0)]
    pub theta1: f64,

    /// Momentum-grid offset.
    #[arg(long, default_value_t = 0.0)]
    pub theta2: f64,

    /// harper | saddle | free | tilted | harmonic | custom
    #[arg(long, default_value = "harper")]
    pub model: ModelChoice,

    /// Two-column CSV (ε(k_m), v(x_j)), N rows; required for `--model custom`.
    #[arg(long)]
    pub samples: Option<PathBuf>,

    /// eigen:K | superpose:I,J | random | packet:X,P
    /// [default: superpose:0,1 for evolve, velocity and density; eigen:0 otherwise]
    #[arg(long)]
    pub state: Option<StateChoice>,

    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,

    #[arg(long, default_value_t = 100)]
    pub steps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Artifact path; without it only the summary line is printed.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// [default: csv for evolve and scatter, json otherwise]
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Scattering energy.
    #[arg(long = "E", default_value_t = 0.0)]
    pub energy: f64,

    /// Half-width of the saddle window.
    #[arg(long = "X", default_value_t = 8.0)]
    pub half_window: f64,

    /// Transfer-matrix step.
    #[arg(long = "h", default_value_t = 1e-3)]
    pub step: f64,

    /// Packet or orbit start, position.
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,

    /// Packet or orbit start, momentum.
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,

    /// Histogram bins per axis.
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
}

impl RunConfig {
    /// Parse and validate; `argv` excludes the program name.
    pub fn parse_args<I, T>(argv: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let args = std::iter::once(std::ffi::OsString::from("lll-phase")).chain(argv.into_iter().map(Into::into));
        let cfg = RunConfig::try_parse_from(args).map_err(CliError::Clap)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.n < 2 {
            return usage(format!("--N must be at least 2, got {}", self.n));
        }
        for (name, v) in [("--theta1", self.theta1), ("--theta2", self.theta2), ("--x0", self.x0), ("--p0", self.p0)] {
            if !v.is_finite() {
                return usage(format!("{name} must be finite"));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return usage(format!("--dt must be positive, got {}", self.dt));
        }
        if self.steps == 0 {
            return usage("--steps must be at least 1".into());
        }
        if !self.energy.is_finite() || !self.half_window.is_finite() || !(self.step > 0.0 && self.step.is_finite()) {
            return usage("--E, --X and --h must be finite, --h positive".into());
        }
        if self.bins < 4 {
            return usage(format!("--bins must be at least 4, got {}", self.bins));
        }
        match (self.model, &self.samples) {
            (ModelChoice::Custom, None) => usage("--model custom needs --samples".into()),
            (ModelChoice::Named(_), Some(_)) => usage("--samples is only read with --model custom".into()),
            _ => Ok(()),
        }
    }

    pub fn effective_state(&self) -> StateChoice {
        self.state.unwrap_or(match self.command {
            Command::Evolve | Command::Velocity | Command::Density => StateChoice::Superpose(0, 1),
            _ => StateChoice::Eigen(0),
        })
    }

    pub fn effective_format(&self) -> Format {
        self.format.unwrap_or(match self.command {
            Command::Evolve | Command::Scatter => Format::Csv,
            _ => Format::Json,
        })
    }

    /// Canonical argument list: every field spelled out, so
    /// `parse_args(to_args(c)) == c`.
    pub fn to_args(&self) -> Vec<String> {
        let command = self.command.to_possible_value().expect("no skipped variants").get_name().to_owned();
        let mut out = vec![command];
        let mut push = |flag: &str, value: String| {
            out.push(format!("--{flag}"));
            out.push(value);
        };
        push("N", self.n.to_string());
        push("theta1", self.theta1.to_string());
        push("theta2", self.theta2.to_string());
        push("model", self.model.to_string());
        if let Some(s) = &self.samples {
            push("samples", s.display().to_string());
        }
        if let Some(s) = self.state {
            push("state", s.to_string());
        }
        push("dt", self.dt.to_string());
        push("steps", self.steps.to_string());
        push("seed", self.seed.to_string());
        if let Some(o) = &self.output {
            push("output", o.display().to_string());
        }
        if let Some(f) = self.format {
            push("format", f.to_possible_value().expect("no skipped variants").get_name().to_owned());
        }
        push("E", self.energy.to_string());
        push("X", self.half_window.to_string());
        push("h", self.step.to_string());
        push("x0", self.x0.to_string());
        push("p0", self.p0.to_string());
        push("bins", self.bins.to_string());
        out
    }
}
