use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("path solver did not converge at lambda = {lambda} after {iterations} sweeps")]
    Convergence { lambda: f64, iterations: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
}
