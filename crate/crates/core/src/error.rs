use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coincident geometry: {0}")]
    CoincidentGeometry(&'static str),

    #[error("gimbal singularity: elevation at a pole")]
    GimbalSingularity,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precoder null conflict: region center coincides with the RIS direction")]
    PrecoderNullConflict,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate pair: the two atoms are linearly dependent")]
    DegeneratePair,

    #[error("rank deficient atom set")]
    RankDeficient,

    #[error("empty super-threshold set in the ambiguity grid")]
    EmptyRegion,

    #[error("zero vector has no coherence")]
    ZeroVector,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
