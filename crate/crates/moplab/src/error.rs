use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum MoplabError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e} exceeds tolerance {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("invalid Schatten order {q}: need q >= 1/2 or infinity")]
    InvalidOrder { q: f64 },

    #[error("map is not trace preserving (defect {0:.3e})")]
    NotTracePreserving(f64),

    #[error("map is not completely positive (min Choi eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),

    #[error("empty Kraus set")]
    EmptyKrausSet,

    #[error("threshold equation has no sign change on (2, 64] for b = {b}")]
    NoRoot { b: f64 },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid file contents: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, MoplabError>;
