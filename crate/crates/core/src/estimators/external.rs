use std::io::Write;
use std::process::{Command, Stdio};

use super::{DivergenceEstimator, EntropyEstimator, MiEstimator};
use crate::error::{Error, Result};
use crate::samples::Samples;

/// An estimator run as a child process.
///
/// The child reads sample rows from standard input as CSV, one point per
/// line, and writes a single decimal estimate to standard output. A nonzero
/// exit status counts as a failed estimate.
///
/// For mutual information each line is `x_1..x_K1,y_1..y_K2` and the
/// environment variable `ENTROBOUND_SPLIT` holds `K1`. For divergence the
/// rows of `p` come first, then an empty line, then the rows of `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalEstimator {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalEstimator {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }

    /// Splits a command line with POSIX shell quoting rules.
    pub fn from_command_line(line: &str) -> Result<Self> {
        let mut parts = shell_words::split(line)
            .map_err(|e| Error::External(format!("cannot parse estimator command: {e}")))?
            .into_iter();
        let program = parts
            .next()
            .ok_or_else(|| Error::External("empty estimator command".into()))?;
        Ok(Self::new(program, parts.collect()))
    }

    fn run(&self, input: String, env: Option<(&str, String)>) -> Result<f64> {
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        if let Some((key, value)) = env {
            cmd.env(key, value);
        }
        let mut child = cmd
            .spawn()
            .map_err(|e| Error::External(format!("cannot start {}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let output = child
            .wait_with_output()
            .map_err(|e| Error::External(format!("{}: {e}", self.program)))?;
        // A child that exits without reading its input closes the pipe early;
        // its exit status decides the outcome.
        let _ = writer.join();
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(Error::External(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                stderr.lines().next().unwrap_or("")
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        stdout
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::External(format!("unparsable estimate {:?}", stdout.trim())))
    }
}

fn write_rows(out: &mut String, samples: &Samples<f64>) {
    for row in samples.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
}

impl EntropyEstimator for ExternalEstimator {
    fn estimate_entropy(&self, samples: &Samples<f64>) -> Result<f64> {
        let mut input = String::new();
        write_rows(&mut input, samples);
        self.run(input, None)
    }
}

impl MiEstimator for ExternalEstimator {
    fn estimate_mi(&self, x: &Samples<f64>, y: &Samples<f64>) -> Result<f64> {
        let mut input = String::new();
        write_rows(&mut input, &x.join(y)?);
        self.run(input, Some(("ENTROBOUND_SPLIT", x.dim().to_string())))
    }
}

impl DivergenceEstimator for ExternalEstimator {
    fn estimate_divergence(&self, p: &Samples<f64>, q: &Samples<f64>) -> Result<f64> {
        let mut input = String::new();
        write_rows(&mut input, p);
        input.push('\n');
        write_rows(&mut input, q);
        self.run(input, None)
    }
}
