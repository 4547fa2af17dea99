use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitianInput { deviation: f64 },

    #[error("matrix has eigenvalue {eigenvalue:.3e} below the PSD tolerance")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("direction ({x}, {y}, {z}) is not a unit vector")]
    NonUnitDirection { x: f64, y: f64, z: f64 },

    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("measurement branch has probability {probability:.3e}")]
    ZeroProbabilityBranch { probability: f64 },

    #[error("correlation for direction {0} is missing")]
    MissingDirection(char),

    #[error("strength compensation requires non-zero {0}")]
    ZeroStrength(&'static str),

    #[error("no outcome counts")]
    EmptyCounts,

    #[error("Pauli expectation <{0}{1}> is missing")]
    MissingExpectation(char, char),

    #[error("{0}")]
    InvalidArgument(String),
}
