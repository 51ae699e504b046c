use thiserror::Error;

pub type Result<T, E = CascadeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sample contains no positive observations")]
    NoPositiveSamples,

    #[error("sample is empty")]
    EmptySample,

    #[error("cannot draw {requested} items from a population of {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("zero sampling weight has no inverse-probability correction")]
    ZeroWeight,

    #[error("failure probability {0} must lie strictly between 0 and 1")]
    InvalidDelta(f64),

    #[error("oracle has no label for record {0}")]
    OracleMissing(u64),

    #[error(
        "penalized logistic fit did not converge after {iterations} iterations \
         (gradient norm {gradient_norm:.3e}, objective {objective:.6})"
    )]
    FitDidNotConverge {
        iterations: usize,
        gradient_norm: f64,
        objective: f64,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
