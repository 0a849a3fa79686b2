use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A function was evaluated outside the set where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Adaptive quadrature ran out of panels before meeting the tolerance.
    #[error(
        "quadrature did not converge: estimate {estimate:e} with error {achieved:e} \
         (requested {requested:e}) after {panels} panels"
    )]
    Convergence {
        estimate: f64,
        achieved: f64,
        requested: f64,
        panels: usize,
    },

    /// The model has no damping (`γ^β = 0`), so the SNR is undefined.
    #[error("singular model: {0}")]
    SingularModel(String),

    /// Numerical integration left the physical state space.
    #[error("integration became unstable at tau = {tau}: {reason}")]
    Stability { tau: f64, reason: String },

    /// The least-squares normal equations are too ill-conditioned to solve.
    #[error("ill-conditioned fit: {0}")]
    Conditioning(String),

    /// A bracket did not contain an interior maximum.
    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Stability { .. }
                | Error::Conditioning(_)
                | Error::Bracket(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
