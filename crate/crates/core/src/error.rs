use thiserror::Error;

use crate::group::GroupSpec;
use crate::quasitile::QuasiTiling;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied inputs outside an operation's contract.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("operands belong to different groups: {left:?} vs {right:?}")]
    MixedGroups { left: GroupSpec, right: GroupSpec },

    #[error("coordinate {value} exceeds the declared bound of +/-2^31")]
    CoordinateOutOfBounds { value: i64 },

    #[error("footprint of {cells} cells ({configurations} configurations) exceeds the exact budget of {budget}; use the Monte Carlo estimator")]
    FootprintTooLarge {
        cells: usize,
        configurations: u128,
        budget: u128,
    },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("quasi-tiling reached coverage {achieved:.6}, below the required {required:.6}")]
    CoverageNotReached {
        achieved: f64,
        required: f64,
        partial: Box<QuasiTiling>,
    },

    #[error("wrap guard violated: {0}")]
    WrapGuard(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
