use thiserror::Error;

pub type Result<T, E = RspError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RspError {
    #[error("atom number must be at least {min}, got {got}")]
    AtomNumber { got: usize, min: usize },

    #[error("Fock index {k} out of range for N = {n}")]
    FockIndex { k: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("state has zero norm")]
    DegenerateState,

    #[error("eigensolver failed on a {size}x{size} matrix")]
    Eigensolver { size: usize },

    #[error("optimal-time search found a flat fidelity landscape for N = {n}")]
    SearchFailed { n: usize },

    #[error("contract violated: {0}")]
    Contract(&'static str),

    #[error("probabilities sum to {sum}, expected 1")]
    Unnormalized { sum: f64 },

    #[error("post-selection with k_cut = {k_cut} keeps no probability")]
    EmptyPostSelection { k_cut: usize },

    #[error("k_cut = {k_cut} must satisfy 2*k_cut < N = {n}")]
    PostSelectionCut { k_cut: usize, n: usize },

    #[error("outcome k = {k} has zero probability")]
    ZeroProbability { k: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
}
