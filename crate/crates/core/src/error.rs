use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum LcuError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("matrix is not unitary: ||U^dag U - I||_F = {0:e}")]
    NotUnitary(f64),

    #[error("rank-deficient coefficient matrix: smallest singular value {sigma_min:e} (largest {sigma_max:e})")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("every column is underdetermined ({observed} observations max, {needed} needed)")]
    AllUnderdetermined { observed: usize, needed: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LcuError>;

impl LcuError {
    /// Valid input on which a numerical method produced no answer, as
    /// opposed to malformed input.
    pub fn is_recovery_failure(&self) -> bool {
        matches!(
            self,
            LcuError::NoConvergence { .. }
                | LcuError::RankDeficient { .. }
                | LcuError::AllUnderdetermined { .. }
        )
    }
}
