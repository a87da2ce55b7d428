//! Experiment configuration: command-line flags, optionally backed by a flat
//! `key = value` file whose keys are the flag names. Flags override the file.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::ingest::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Certified differential entropy of a density or a sample file.
    Estimate,
    /// Evaluate the confidence bound for given K, L, M, N, delta.
    Bound,
    /// Find the bin count minimizing the bound.
    OptimizeM,
    /// Certified mutual information.
    MiEstimate,
    /// Repeated certified estimates on a density with known entropy.
    Coverage,
    /// Contamination counterexample for entropy.
    Prop1Demo,
    /// Counterexample for mutual information.
    MiDemo,
    /// Counterexample for relative entropy.
    KlDemo,
    /// Random-codebook counterexample for mutual information with a discrete label.
    DiscreteMiDemo,
    /// Numerically check the inequalities behind the bound.
    VerifyLemmas,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Bound => "bound",
            Command::OptimizeM => "optimize-m",
            Command::MiEstimate => "mi-estimate",
            Command::Coverage => "coverage",
            Command::Prop1Demo => "prop1-demo",
            Command::MiDemo => "mi-demo",
            Command::KlDemo => "kl-demo",
            Command::DiscreteMiDemo => "discrete-mi-demo",
            Command::VerifyLemmas => "verify-lemmas",
        }
    }
}

trait KvValue: Sized {
    fn to_kv(&self) -> String;
    fn parse_kv(text: &str, key: &str) -> CliResult<Self>;
}

macro_rules! kv_from_str {
    ($($t:ty),*) => {$(
        impl KvValue for $t {
            fn to_kv(&self) -> String {
                self.to_string()
            }
            fn parse_kv(text: &str, key: &str) -> CliResult<Self> {
                text.parse().map_err(|_| CliError::Config(format!("invalid value {text:?} for {key}")))
            }
        }
    )*};
}

kv_from_str!(usize, u32, u64, f64, String);

impl KvValue for PathBuf {
    fn to_kv(&self) -> String {
        self.display().to_string()
    }
    fn parse_kv(text: &str, _: &str) -> CliResult<Self> {
        Ok(PathBuf::from(text))
    }
}

impl KvValue for Format {
    fn to_kv(&self) -> String {
        self.as_str().to_owned()
    }
    fn parse_kv(text: &str, _: &str) -> CliResult<Self> {
        text.parse()
    }
}

macro_rules! options {
    ($($(#[$meta:meta])* $name:ident : $ty:ty),* $(,)?) => {
        /// Every experiment setting; unset values fall back to the config
        /// file, then to per-command defaults.
        #[derive(Debug, Clone, Default, PartialEq, clap::Args)]
        pub struct Options {
            $(
                $(#[$meta])*
                #[arg(long, allow_negative_numbers = true)]
                pub $name: Option<$ty>,
            )*
        }

        impl Options {
            /// Fills unset values from `fallback`.
            pub fn or(self, fallback: Options) -> Options {
                Options { $($name: self.$name.or(fallback.$name),)* }
            }

            pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$name {
                        out.push((stringify!($name), v.to_kv()));
                    }
                )*
                out
            }

            pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
                match key {
                    $(stringify!($name) => self.$name = Some(<$ty as KvValue>::parse_kv(value, key)?),)*
                    _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
                }
                Ok(())
            }
        }
    };
}

options! {
    /// Built-in density: tent, uniform, trapezoid:<width>, scaled-tent:<side>.
    density: String,
    /// Sample file (CSV or little-endian f64 rows).
    input: PathBuf,
    /// Input format; inferred from the file extension when absent.
    format: Format,
    /// Dimension K.
    k: usize,
    /// Number of leading columns of the input that form x (mi-estimate).
    split: usize,
    /// Lipschitz constant L with respect to the l1 norm.
    l: f64,
    /// Bins per axis M.
    m: u64,
    /// Sample count N.
    n: u64,
    /// Error probability delta.
    delta: f64,
    /// Required error C of the demonstrations, in nats.
    c: f64,
    /// Number of seeded trials (default 100).
    trials: u64,
    /// Master seed (default 0).
    seed: u64,
    /// Output CSV path; a `.meta` file is written next to it.
    out: PathBuf,
    /// Quadrature tolerance of verify-lemmas, in nats.
    tol: f64,
    /// Random pairs for the scans of verify-lemmas.
    pairs: u64,
    /// External estimator command line used by the demos.
    estimator: String,
    /// Codebook length of discrete-mi-demo.
    bins: u64,
    /// Label alphabet size of discrete-mi-demo.
    alphabet: u32,
    /// Number of random codebooks of discrete-mi-demo.
    codebooks: u64,
    /// Lower corner of the cube containing input samples.
    lo: f64,
    /// Upper corner of the cube containing input samples.
    hi: f64,
}

#[derive(Debug, Parser)]
#[command(name = "entrobound", version, about = "Certified histogram entropy estimation")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Flat `key = value` file with defaults for any of the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub options: Options,
}

impl ExperimentConfig {
    pub fn from_cli(cli: Cli) -> CliResult<Self> {
        let options = match &cli.config {
            Some(path) => {
                let file = load(path)?;
                if let Some(cmd) = file.command {
                    if cmd != cli.command {
                        return Err(CliError::Config(format!(
                            "config file is for {}, not {}",
                            cmd.name(),
                            cli.command.name()
                        )));
                    }
                }
                cli.options.or(file.options)
            }
            None => cli.options,
        };
        Ok(Self {
            command: cli.command,
            options,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("command = {}\n", self.command.name());
        for (k, v) in self.options.to_pairs() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let file = parse_text(text)?;
        Ok(Self {
            command: file
                .command
                .ok_or_else(|| CliError::Config("missing command".into()))?,
            options: file.options,
        })
    }
}

struct ConfigFile {
    command: Option<Command>,
    options: Options,
}

fn load(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_text(&text)
}

fn parse_text(text: &str) -> CliResult<ConfigFile> {
    let mut options = Options::default();
    let mut command = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "command" {
            command = Some(
                Command::from_str(value, false)
                    .map_err(|_| CliError::Config(format!("unknown command {value:?}")))?,
            );
        } else {
            options
                .set(key, value)
                .map_err(|e| CliError::Config(format!("config line {}: {e}", i + 1)))?;
        }
    }
    Ok(ConfigFile { command, options })
}
