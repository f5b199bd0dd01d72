use thiserror::Error;

use crate::dressed::LineId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular or ill-conditioned system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("steady state is not unique (bordered generator condition estimate {condition:.3e})")]
    NonUniqueSteadyState { condition: f64 },

    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("line {line} is dark (steady-state intensity {intensity:.3e} /ps); normalization undefined")]
    DarkLine { line: LineId, intensity: f64 },

    #[error("no oscillation detected (oscillatory fit improves residual by {improvement:.2}%)", improvement = .improvement * 100.0)]
    NoOscillation { improvement: f64 },

    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
