use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit splitting undefined: delta and epsilon are both zero")]
    DegenerateQubit,
    #[error("Fock cutoff {0} is below the minimum of 2")]
    CutoffTooSmall(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operator kind {kind} is not available for model {model}")]
    KindMismatch { kind: String, model: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("no dissipation channels given")]
    EmptyChannels,
    #[error("basis is inconsistent with the channel operators: {0}")]
    InconsistentBasis(String),
    #[error("steady state is not unique (null space dimension {dimension})")]
    DegenerateSteadyState { dimension: usize },
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("singular harmonic block at k = {k}")]
    SingularHarmonicSolve { k: i32 },
    #[error("resolvent is singular at omega = {0}")]
    ResolventSingular(f64),
    #[error("drive amplitude b_in is zero")]
    ZeroDrive,
    #[error("unknown state label {0:?}")]
    UnknownLabel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
