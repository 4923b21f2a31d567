use thiserror::Error;

/// Errors produced by the numerical pipeline.
///
/// Every variant carries enough context to explain the failure on a command line;
/// the CLI maps [`Error::is_numerical`] failures to their own exit code.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("not a frame at this truncation (lower bound {lower:.3e})")]
    NotAFrame { lower: f64 },

    #[error(
        "conjugate-gradient solve did not converge after {iterations} iterations (relative residual {residual:.3e})"
    )]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("newton iteration diverged at {last:?} (residual {residual:.3e})")]
    NewtonDiverged { last: Vec<f64>, residual: f64 },

    #[error("degenerate phase: min |det d2_x,eta Phi| = {min_det:.3e} below floor {floor:.3e}")]
    Degenerate { min_det: f64, floor: f64 },

    #[error("singular time: |cos t| = {cos_t:.3e}, distance to nearest pi/2 + k pi is {distance:.3e}")]
    SingularTime { cos_t: f64, distance: f64 },

    #[error("singular block: |det A| = {det:.3e}")]
    SingularBlock { det: f64 },

    #[error("not symplectic: |tA J A - J| = {defect:.3e}")]
    NotSymplectic { defect: f64 },

    #[error("no signal: every sample is below the floor {floor:.1e}")]
    NoSignal { floor: f64 },

    #[error("insufficient data: {have} usable samples, need {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Failures of the numerics proper (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotAFrame { .. }
                | Error::SolverDiverged { .. }
                | Error::NewtonDiverged { .. }
                | Error::Degenerate { .. }
                | Error::SingularTime { .. }
                | Error::SingularBlock { .. }
                | Error::NoSignal { .. }
                | Error::InsufficientData { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
