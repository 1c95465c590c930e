use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("root {location} has modulus {modulus:.6} > 1 - {margin}; poles must lie away from the unit circle")]
    NoInteriorPole {
        location: Complex64,
        modulus: f64,
        margin: f64,
    },

    #[error("evaluation point {z} is within {distance:.3e} of the pole {pole}")]
    NearPole {
        z: Complex64,
        pole: Complex64,
        distance: f64,
    },

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("invalid Blaschke product: {0}")]
    InvalidBlaschke(String),

    #[error("invalid initial condition: {0}")]
    InvalidStart(String),

    #[error("integration guard tripped at t = {at_time} before enough samples were produced")]
    GuardTripped { at_time: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("{rule} rule cannot integrate {count} samples")]
    BadSampleCount { rule: &'static str, count: usize },

    #[error("the data_integral estimator needs velocity samples for every trajectory")]
    MissingVelocities,

    #[error("window {window} has {samples} samples; at least 3 are required")]
    BadWindowCount { window: usize, samples: usize },

    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_trajectory(self, index: usize) -> Self {
        Error::Trajectory {
            index,
            source: Box::new(self),
        }
    }
}
