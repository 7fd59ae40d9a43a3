use thiserror::Error;

/// Error type shared by all solver components.
#[derive(Debug, Error)]
pub enum FsiError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("coupling error: {0}")]
    Coupling(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("linear solver: {0}")]
    LinearSolver(String),

    #[error(
        "Newton did not converge after {iters} iterations \
         (residual 2-norm {resid_2:.3e}, max-norm {resid_inf:.3e})"
    )]
    NonConvergence {
        iters: usize,
        resid_2: f64,
        resid_inf: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FsiError>;
