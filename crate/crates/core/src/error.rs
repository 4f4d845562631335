use std::fmt;

use thiserror::Error;

/// A single violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    pub(crate) fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("validation failed: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid channel split: {open} open channels out of {total}")]
    InvalidChannelSplit { total: u32, open: u32 },

    #[error("rate `{name}` must be finite and positive, got {value}")]
    NonFiniteRate { name: &'static str, value: f64 },

    #[error("balance equations are singular on the enumerated state space")]
    SingularSystem,

    #[error("state space of {states} states exceeds the direct-solve limit of {limit}")]
    StateSpaceTooLarge { states: usize, limit: usize },

    #[error("channel class `{0}` is empty")]
    DegenerateSplit(&'static str),

    #[error("adjacent-macrocell handoff balance diverges (loop gain {gain} >= 1)")]
    BalanceDivergence { gain: f64 },

    #[error("offered traffic must be a nonnegative finite number, got {0}")]
    NegativeTraffic(f64),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("{name} = {value} lies outside its support [{lower}, {upper}]")]
    OutOfSupport {
        name: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("Monte-Carlo draw produced a non-finite value")]
    NonFiniteSample,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
