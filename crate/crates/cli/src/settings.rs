//! Flags, the optional TOML config file, and their merge. Every flag may
//! also appear in the file under the same kebab-case name; the command line
//! wins.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Seeds are full `u64`s but TOML integers are signed; large seeds are
/// written as strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => u64::try_from(v).map(Seed).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map(Seed).map_err(serde::de::Error::custom),
        }
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Analysis settings shared by flags, config files and the run manifest.
/// List-valued settings keep their command-line spelling so a manifest
/// reproduces the parsed values bit for bit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AnalyzeFile {
    pub input: Option<PathBuf>,
    pub outcome: Option<String>,
    pub treatment: Option<String>,
    pub covariates: Option<String>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub eps_grid: Option<String>,
    pub eps0_grid: Option<String>,
    pub delta: Option<String>,
    pub model: Option<String>,
    pub folds: Option<usize>,
    pub alpha: Option<f64>,
    pub bootstrap: Option<usize>,
    pub clip: Option<f64>,
    pub learner: Option<String>,
    pub seed: Option<Seed>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// Written into manifests; ignored on input.
    pub tool_version: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// TOML file supplying any of the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub outcome: Option<String>,
    /// Binary 0/1 treatment column.
    #[arg(long)]
    pub treatment: Option<String>,
    /// Comma-separated covariate columns.
    #[arg(long)]
    pub covariates: Option<String>,
    /// Lower end of the outcome range; defaults to the observed minimum.
    #[arg(long, allow_hyphen_values = true)]
    pub y_min: Option<f64>,
    /// Upper end of the outcome range; defaults to the observed maximum.
    #[arg(long, allow_hyphen_values = true)]
    pub y_max: Option<f64>,
    /// Confounding-proportion grid for curves and bands, `start:end:count`.
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// Grid searched for eps0, `start:end:count`. Defaults to 201 points
    /// spanning the eps grid.
    #[arg(long)]
    pub eps0_grid: Option<String>,
    /// Comma-separated severities in [0, 1].
    #[arg(long)]
    pub delta: Option<String>,
    /// `x`, `xa` or `x,xa`.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Multiplier-bootstrap replicates.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Propensity clipping level t in (0, 0.5).
    #[arg(long)]
    pub clip: Option<f64>,
    /// `logistic`, `knn` or `logistic-knn`.
    #[arg(long)]
    pub learner: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateFile {
    pub n: Option<String>,
    pub reps: Option<usize>,
    pub r: Option<f64>,
    pub full: Option<bool>,
    pub eps_grid: Option<String>,
    pub eps0_grid: Option<String>,
    pub delta: Option<f64>,
    pub model: Option<String>,
    pub folds: Option<usize>,
    pub alpha: Option<f64>,
    pub bootstrap: Option<usize>,
    pub clip: Option<f64>,
    pub learner: Option<String>,
    pub seed: Option<Seed>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub tool_version: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated sample sizes, one report row each.
    #[arg(long)]
    pub n: Option<String>,
    /// Monte Carlo replicates per sample size.
    #[arg(long)]
    pub reps: Option<usize>,
    /// True ATE of the data-generating process.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Full-scale run: n = 500, 1000, 5000, 10000 with 500 replicates.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub eps_grid: Option<String>,
    #[arg(long)]
    pub eps0_grid: Option<String>,
    /// Single severity in [0, 1].
    #[arg(long)]
    pub delta: Option<f64>,
    /// `x` or `xa`.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub clip: Option<f64>,
    /// `logistic`, `knn`, `logistic-knn` or `oracle` (true nuisances).
    #[arg(long)]
    pub learner: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Number of random finite instances.
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest support size of a random instance.
    #[arg(long, default_value_t = 12)]
    pub max_support: usize,
    /// Points in the eps grid on [0, 1].
    #[arg(long, default_value_t = 11)]
    pub eps_points: usize,
    /// Shifts every plug-in upper bound; exercises the failure path.
    #[arg(long, hide = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub corrupt_offset: f64,
}

pub fn read_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Validation(format!("config {}: {e}", path.display())))
}

impl AnalyzeArgs {
    /// Flags layered over the config file.
    pub fn merged(&self) -> Result<AnalyzeFile, Failure> {
        let f: AnalyzeFile = read_config(self.config.as_deref())?;
        Ok(AnalyzeFile {
            input: self.input.clone().or(f.input),
            outcome: self.outcome.clone().or(f.outcome),
            treatment: self.treatment.clone().or(f.treatment),
            covariates: self.covariates.clone().or(f.covariates),
            y_min: self.y_min.or(f.y_min),
            y_max: self.y_max.or(f.y_max),
            eps_grid: self.eps_grid.clone().or(f.eps_grid),
            eps0_grid: self.eps0_grid.clone().or(f.eps0_grid),
            delta: self.delta.clone().or(f.delta),
            model: self.model.clone().or(f.model),
            folds: self.folds.or(f.folds),
            alpha: self.alpha.or(f.alpha),
            bootstrap: self.bootstrap.or(f.bootstrap),
            clip: self.clip.or(f.clip),
            learner: self.learner.clone().or(f.learner),
            seed: self.seed.map(Seed).or(f.seed),
            out_dir: self.out_dir.clone().or(f.out_dir),
            format: self.format.or(f.format),
            tool_version: None,
        })
    }
}

impl SimulateArgs {
    pub fn merged(&self) -> Result<SimulateFile, Failure> {
        let f: SimulateFile = read_config(self.config.as_deref())?;
        Ok(SimulateFile {
            n: self.n.clone().or(f.n),
            reps: self.reps.or(f.reps),
            r: self.r.or(f.r),
            full: if self.full { Some(true) } else { f.full },
            eps_grid: self.eps_grid.clone().or(f.eps_grid),
            eps0_grid: self.eps0_grid.clone().or(f.eps0_grid),
            delta: self.delta.or(f.delta),
            model: self.model.clone().or(f.model),
            folds: self.folds.or(f.folds),
            alpha: self.alpha.or(f.alpha),
            bootstrap: self.bootstrap.or(f.bootstrap),
            clip: self.clip.or(f.clip),
            learner: self.learner.clone().or(f.learner),
            seed: self.seed.map(Seed).or(f.seed),
            out_dir: self.out_dir.clone().or(f.out_dir),
            format: self.format.or(f.format),
            tool_version: None,
        })
    }
}
