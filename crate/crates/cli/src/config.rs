//! Flag parsing and `key=value` config files. Flags win over the file,
//! the file wins over defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thermoflux_core::DualVariant;

#[derive(Debug, Parser)]
#[command(
    name = "thermoflux",
    version,
    about = "Fluctuation tables, dualities and tomographic reconstructions for oscillator ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Mean, variance, entropy and manifold curvature of the total energy.
    Stats,
    /// Energy cumulants K_1..K_n0 and cumulants of the specific-energy fluctuation.
    Cumulants,
    /// Solve for the dual system.
    Dual,
    /// Tabulate the path joining a system to its dual.
    Homotopy,
    /// One tomogram of the homotopy family, sampled along its axis.
    Tomogram,
    /// Invert a tomogram family on a grid.
    Reconstruct,
    /// Exact Gibbs sampling of the total energy.
    Sample,
    /// Check module invariants and print a pass report.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::Cumulants => "cumulants",
            Command::Dual => "dual",
            Command::Homotopy => "homotopy",
            Command::Tomogram => "tomogram",
            Command::Reconstruct => "reconstruct",
            Command::Sample => "sample",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Internal,
    Cgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Homotopy,
    Independent,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Identities,
    Coefficients,
    Cumulants,
    Sampler,
    Duality,
    Homotopy,
    Tomography,
    Quantum,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Level spacing (internal energy units).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Number of oscillators.
    #[arg(long = "N", global = true, allow_negative_numbers = true)]
    pub n: Option<f64>,
    /// Cumulant order (truncation degree for tomograms).
    #[arg(long, global = true)]
    pub n0: Option<usize>,
    /// symmetric | remark1
    #[arg(long, global = true)]
    pub variant: Option<DualVariant>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub sweeps: Option<usize>,
    /// Number of t values on [0, π/2] for `homotopy`, or of z samples for `tomogram`.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Tomogram angle in radians.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub family: Option<Family>,
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    #[arg(long, global = true)]
    pub ny: Option<usize>,
    /// Grid half-width in marginal standard deviations.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub extent: Option<f64>,
    #[arg(long = "n-theta", global = true)]
    pub n_theta: Option<usize>,
    #[arg(long = "r-nodes", global = true)]
    pub r_nodes: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub suite: Option<Suite>,
    /// Artifact path; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    pub units: Option<Units>,
    /// Print the {config, results, diagnostics, version} document on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write a gnuplot script for the CSV artifact to this path.
    #[arg(long, global = true)]
    pub gnuplot: Option<PathBuf>,
    /// Plain-text key=value file merged under the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub a: f64,
    pub beta: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub n0: usize,
    pub variant: DualVariant,
    pub seed: u64,
    pub sweeps: usize,
    pub points: usize,
    pub theta: f64,
    pub family: Family,
    pub nx: usize,
    pub ny: usize,
    pub extent: f64,
    pub n_theta: usize,
    pub r_nodes: usize,
    pub suite: Suite,
    pub format: Format,
    pub units: Units,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub gnuplot: Option<PathBuf>,
    #[serde(skip)]
    pub json: bool,
}

const KEYS: &[&str] = &[
    "a", "beta", "N", "n0", "variant", "seed", "sweeps", "points", "theta", "family", "nx", "ny", "extent",
    "n-theta", "r-nodes", "suite", "output", "format", "units", "gnuplot",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!(
                "config line {}: expected key=value, got {line:?}",
                lineno + 1
            ));
        };
        let mut key = k.trim().replace('_', "-");
        if key == "n" {
            key = "N".into();
        }
        if !KEYS.contains(&key.as_str()) {
            return err(format!("config line {}: unknown key {:?}", lineno + 1, k.trim()));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn load_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse_config_file(&text),
        Err(e) => err(format!("cannot read config file {}: {e}", path.display())),
    }
}

struct Merge<'a> {
    file: &'a BTreeMap<String, String>,
}

impl Merge<'_> {
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(s) => s
                .parse()
                .or_else(|e| err(format!("config key {key}: cannot parse {s:?}: {e}"))),
            None => Ok(default),
        }
    }

    fn pick_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, ConfigError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(s) => {
                T::from_str(s, true).or_else(|_| err(format!("config key {key}: invalid value {s:?}")))
            }
            None => Ok(default),
        }
    }

    fn pick_path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.file.get(key).map(PathBuf::from))
    }
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, ConfigError> {
        let file = match &flags.config {
            Some(p) => load_file(p)?,
            None => BTreeMap::new(),
        };
        let m = Merge { file: &file };
        let default_n0 = if command == Command::Cumulants { 8 } else { 4 };
        let cfg = RunConfig {
            command,
            a: m.pick(flags.a, "a", 1.0)?,
            beta: m.pick(flags.beta, "beta", 1.0)?,
            n: m.pick(flags.n, "N", 100.0)?,
            n0: m.pick(flags.n0, "n0", default_n0)?,
            variant: m.pick(flags.variant, "variant", DualVariant::MeanAnchored)?,
            seed: m.pick(flags.seed, "seed", 42)?,
            sweeps: m.pick(flags.sweeps, "sweeps", 100_000)?,
            points: m.pick(flags.points, "points", 33)?,
            theta: m.pick(flags.theta, "theta", std::f64::consts::FRAC_PI_4)?,
            family: m.pick_enum(flags.family, "family", Family::Homotopy)?,
            nx: m.pick(flags.nx, "nx", 41)?,
            ny: m.pick(flags.ny, "ny", 41)?,
            extent: m.pick(flags.extent, "extent", 6.0)?,
            n_theta: m.pick(flags.n_theta, "n-theta", 64)?,
            r_nodes: m.pick(flags.r_nodes, "r-nodes", 96)?,
            suite: m.pick_enum(flags.suite, "suite", Suite::All)?,
            format: m.pick_enum(flags.format, "format", Format::Json)?,
            units: m.pick_enum(flags.units, "units", Units::Internal)?,
            output: m.pick_path(flags.output, "output"),
            gnuplot: m.pick_path(flags.gnuplot, "gnuplot"),
            json: flags.json,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                err(format!("--{name} = {v} must be positive and finite"))
            }
        };
        positive("a", self.a)?;
        positive("beta", self.beta)?;
        positive("N", self.n)?;
        positive("extent", self.extent)?;
        if !self.theta.is_finite() {
            return err("--theta must be finite");
        }
        let (n0_min, n0_max) = match self.command {
            Command::Cumulants => (1, 20),
            Command::Sample => (1, 4),
            Command::Tomogram | Command::Reconstruct => (2, 8),
            _ => (1, 8),
        };
        if !(n0_min..=n0_max).contains(&self.n0) {
            return err(format!(
                "--n0 = {} must lie in {n0_min}..={n0_max} for {}",
                self.n0,
                self.command.name()
            ));
        }
        if self.points < 2 {
            return err(format!("--points = {} must be at least 2", self.points));
        }
        if self.nx < 2 || self.ny < 2 {
            return err("--nx and --ny must be at least 2");
        }
        if self.command == Command::Sample {
            if self.n.fract() != 0.0 || self.n > u32::MAX as f64 {
                return err(format!("--N = {} must be a whole number for sampling", self.n));
            }
            if self.sweeps < thermoflux_core::sampler::MIN_SWEEPS_FOR_ESTIMATES {
                return err(format!(
                    "--sweeps = {} must be at least {}",
                    self.sweeps,
                    thermoflux_core::sampler::MIN_SWEEPS_FOR_ESTIMATES
                ));
            }
        }
        if self.gnuplot.is_some() && (self.format != Format::Csv || self.output.is_none()) {
            return err("--gnuplot needs --format csv and an --output path for the data");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let map = parse_config_file("# comment\na = 2\nbeta=0.5 # inline\n\nn_theta = 32\nN=10").unwrap();
        assert_eq!(map["a"], "2");
        assert_eq!(map["beta"], "0.5");
        assert_eq!(map["n-theta"], "32");
        assert_eq!(map["N"], "10");
        assert!(parse_config_file("temperature = 3").is_err());
        assert!(parse_config_file("a 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_file("a = 2\nbeta = 3").unwrap();
        let m = Merge { file: &file };
        assert_eq!(m.pick(Some(5.0), "a", 1.0).unwrap(), 5.0);
        assert_eq!(m.pick(None, "beta", 1.0).unwrap(), 3.0);
        assert_eq!(m.pick(None, "N", 100.0).unwrap(), 100.0);
    }

    #[test]
    fn validation_names_the_precondition() {
        let flags = Flags {
            beta: Some(-1.0),
            ..Flags::default()
        };
        let e = RunConfig::resolve(Command::Stats, flags).unwrap_err();
        assert!(e.0.contains("--beta"));
        let flags = Flags {
            n: Some(2.5),
            ..Flags::default()
        };
        assert!(RunConfig::resolve(Command::Sample, flags).is_err());
    }
}
