use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{func}: argument outside domain ({detail})")]
    Domain { func: &'static str, detail: String },

    #[error("{what} did not converge after {iterations} terms (partial sum {partial:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        partial: f64,
    },

    #[error("quadrature failed on [{lower:e}, {upper:e}]: estimate {value:e} with error {error:e} after {intervals} subintervals")]
    Quadrature {
        lower: f64,
        upper: f64,
        value: f64,
        error: f64,
        intervals: usize,
    },

    #[error("no solution: target {target:e} outside bracket [{low:e}, {high:e}]")]
    NoSolution { target: f64, low: f64, high: f64 },

    #[error("simulation: {0}")]
    Simulation(String),

    #[error("unit conversion: {0}")]
    Units(String),
}

pub type Result<T> = std::result::Result<T, Error>;
