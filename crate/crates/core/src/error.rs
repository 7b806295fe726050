use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("excitation count {n_excitations} outside 0..={n_sites}")]
    ExcitationOutOfRange { n_sites: usize, n_excitations: usize },

    #[error("site {site} outside 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("basis describes {basis} sites but the chain has {chain}")]
    BasisMismatch { basis: usize, chain: usize },

    #[error("closed-form eigenmodes require a uniform chain ({0})")]
    NonUniformChain(String),

    #[error("no decoherence-free pair: N + 1 = {0} is not divisible by 3")]
    NoDecoherenceFreePair(usize),

    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),

    #[error("spectral density is negative ({value}) at omega = {omega}")]
    NegativeSpectralDensity { omega: f64, value: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("integrator did not converge: snapshot change {change:e} > {tolerance:e} after {halvings} halvings")]
    NonConvergence { change: f64, tolerance: f64, halvings: u32 },

    #[error("invariant violated at Jt = {time}: {what}")]
    InvariantViolation { time: f64, what: String },

    #[error("noise ensemble exhausted: {0}")]
    EnsembleExhausted(String),

    #[error("superoperator dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("eigensolver did not converge: {0}")]
    EigenSolver(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. }
            | Error::InvariantViolation { .. }
            | Error::NotPositive(_)
            | Error::SingularFit(_)
            | Error::Degenerate(_)
            | Error::EigenSolver(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 2,
        }
    }
}
