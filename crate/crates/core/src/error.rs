use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or an unsupported combination of options.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("reaction term vanishes on (theta0, 1): no front exists")]
    NoFront,

    #[error("could not bracket the laminar speed in [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },

    /// An iterative solve did not reach its tolerance. `history` holds the
    /// update norm of every iteration.
    #[error("no convergence after {iterations} iterations (last update {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("continuation failed at tau = {tau}: {reason}")]
    Continuation { tau: f64, reason: String },

    #[error("non-finite values at t = {t}")]
    BlowUp { t: f64 },

    #[error("recentering monitor tripped at t = {t}: {reason}")]
    Monitor { t: f64, reason: String },

    #[error("singular pivot in banded factorization at row {0}")]
    SingularMatrix(usize),

    #[error("checkpoint: {0}")]
    Checkpoint(#[from] crate::io::checkpoint::CheckpointError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Checkpoint(_) => 2,
            _ => 3,
        }
    }
}
