use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum IsacError {
    /// Configuration value outside its documented domain.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown scenario preset `{0}` (expected S1, S2 or S3)")]
    UnknownPreset(String),

    #[error("estimated channel of UE {ue} has zero norm at subcarrier {subcarrier}")]
    ZeroNormChannel { ue: usize, subcarrier: usize },

    /// `u_1 + u_2` (or a stream's weighted combination) vanishes.
    #[error("degenerate precoding direction at subcarrier {subcarrier}")]
    DegenerateDirection { subcarrier: usize },

    #[error("channel matrix is rank deficient at subcarrier {subcarrier} (singular value ratio {ratio:e})")]
    RankDeficient { subcarrier: usize, ratio: f64 },

    #[error("range profile is identically zero (no energy towards the target)")]
    UndefinedProfile,

    #[error("zero Fisher information: no delay-sensitive energy in the observation")]
    ZeroInformation,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("phase calibration supports exactly 2 transmit elements, found {0}")]
    UnsupportedArray(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl IsacError {
    /// Numeric failures (as opposed to bad input or IO).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            IsacError::ZeroNormChannel { .. }
                | IsacError::DegenerateDirection { .. }
                | IsacError::RankDeficient { .. }
                | IsacError::UndefinedProfile
                | IsacError::ZeroInformation
        )
    }
}

pub type Result<T, E = IsacError> = std::result::Result<T, E>;
