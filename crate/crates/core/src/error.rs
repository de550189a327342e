use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state vector is numerically zero")]
    ZeroVector,
    #[error("state vector contains a non-finite amplitude")]
    NonFinite,
    #[error("dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("position index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("unknown pointer label `{0}`")]
    UnknownLabel(String),
    #[error("coupling angle {0} outside [0, pi]")]
    AngleOutOfRange(f64),
    #[error("DegenerateAngle: theta = {0} has sin(theta) ~ 0 or sits on the tan(theta/2) pole")]
    DegenerateAngle(f64),
    #[error("ZeroPostSelection: post-selection probability {0:e} is zero")]
    ZeroPostSelection(f64),
    #[error(
        "VanishingTildePsi: raw estimate norm {norm:e} is below the floor {floor:e} (sum of amplitudes ~ 0)"
    )]
    VanishingTildePsi { norm: f64, floor: f64 },
    #[error("invalid outcome distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Failures that come from the measurement protocol itself rather than
    /// from malformed input.
    pub fn is_protocol_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateAngle(_) | Error::VanishingTildePsi { .. } | Error::ZeroPostSelection(_)
        )
    }
}
