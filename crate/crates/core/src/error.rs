use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("all three voltages are zero")]
    AllZero,
    #[error("positive-sequence component is zero relative to the phase magnitudes")]
    PositiveSequenceZero,
    #[error("all line-to-line magnitudes vanish (identical phase voltages)")]
    DegenerateTriple,
    #[error("line magnitudes do not form a triangle (3 - 6 beta = {radicand})")]
    NotRealizable { radicand: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("invalid bounds query: {0}")]
    InvalidQuery(String),
    #[error("no grid sample has VUF inside [{lo}%, {hi}%]")]
    EmptyBand { lo: f64, hi: f64 },
}

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: column '{column}': {message}")]
    Parse {
        file: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("network is not radial: {0}")]
    NotRadial(String),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("invalid feeder data: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerFlowError {
    #[error("no convergence after {iterations} iterations (last max |dV| = {last_delta:.3e} p.u.)")]
    NonConvergence {
        iterations: usize,
        last_delta: f64,
        trajectory: Vec<f64>,
    },
    #[error("voltage collapsed at bus {bus} ({magnitude_pu:.4} p.u.) in iteration {iteration}")]
    CollapsedVoltage {
        bus: String,
        magnitude_pu: f64,
        iteration: usize,
    },
    #[error("invalid solve input: {0}")]
    InvalidInput(String),
}

/// Which leg of a before/after comparison failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    WithoutPv,
    WithPv,
}

impl std::fmt::Display for Leg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Leg::WithoutPv => f.write_str("without PV"),
            Leg::WithPv => f.write_str("with PV"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("phase shares infeasible: {0}")]
    SharesInfeasible(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Feeder(#[from] FeederError),
    #[error("power flow failed ({leg}): {source}")]
    Solve {
        leg: Leg,
        #[source]
        source: PowerFlowError,
    },
}
