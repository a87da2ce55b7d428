use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The bin count is below the threshold for which the confidence bound holds.
    #[error("validity error: M = {steps} is below the minimum valid M = {min_steps}")]
    BelowValidSteps { steps: u64, min_steps: u64 },

    /// A hypothesis of a lemma check does not hold for the supplied inputs.
    #[error("validity error: {0}")]
    Hypothesis(String),

    #[error("out-of-support error: sample {sample}, coordinate {coord} = {value} lies outside [{lo}, {hi}]")]
    OutOfSupport {
        sample: usize,
        coord: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("normalization error: probabilities sum to {0}")]
    Normalization(f64),

    #[error("quadrature did not converge after {levels} refinement levels (last difference {last_diff})")]
    NonConvergence { levels: u32, last_diff: f64 },

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("infeasible construction: required entropy gap a = {required_a} nats is not representable")]
    Infeasible { required_a: f64 },

    #[error("external estimator failed: {0}")]
    External(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for the errors that signal violated preconditions of the bound
    /// (as opposed to I/O or external failures).
    pub fn is_validity(&self) -> bool {
        !matches!(self, Error::External(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
