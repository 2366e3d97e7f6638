use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A lossless network cannot absorb a net injection.
    #[error(
        "infeasible: power vector sums to {imbalance:e}; no equilibrium exists for net imbalance on a lossless network"
    )]
    Infeasible { imbalance: f64 },

    #[error("equilibrium solve did not converge after {iterations} iterations (residual {residual_norm:e}); power may exceed coupling capacity")]
    NoConvergence { iterations: usize, residual_norm: f64 },

    #[error("non-finite value in state slot {index}")]
    NonFinite { index: usize },

    #[error("integration diverged at t = {time} s (state slot {index})")]
    Divergence { time: f64, index: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
