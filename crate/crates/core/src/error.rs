use thiserror::Error;

/// Errors raised by the simulator and observer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line is parallel to the projection plane")]
    DegenerateProjection,

    #[error("invalid cone: apex must lie outside the closed base ball")]
    InvalidCone,

    #[error("point lies on the focal plane of the main lens")]
    AtFocalPlane,

    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("depth {depth} is not beyond the minimum depth {min_depth}")]
    BelowMinDepth { depth: f64, min_depth: f64 },

    #[error("gradient probe would fall below the minimum depth")]
    TooClose,

    #[error("window compensation factor is degenerate")]
    DegeneratePrefactor,

    #[error("retinal position lies outside the subimage disc of lenslet ({i}, {j})")]
    OutOfSubimage { i: usize, j: usize },

    #[error("ray does not intersect the scene")]
    NoIntersection,

    #[error("camera orientation is undefined at the path centre")]
    DegenerateOrientation,

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Compact numeric code for an [`Error`], used for per-point status records
/// and across the C ABI.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    DegenerateProjection = 1,
    InvalidCone = 2,
    AtFocalPlane = 3,
    InvalidIntrinsics = 4,
    BelowMinDepth = 5,
    TooClose = 6,
    DegeneratePrefactor = 7,
    OutOfSubimage = 8,
    NoIntersection = 9,
    DegenerateOrientation = 10,
    InvalidScene = 11,
    Config = 12,
    Parse = 13,
    Io = 14,
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::DegenerateProjection => ErrorCode::DegenerateProjection,
            Error::InvalidCone => ErrorCode::InvalidCone,
            Error::AtFocalPlane => ErrorCode::AtFocalPlane,
            Error::InvalidIntrinsics(_) => ErrorCode::InvalidIntrinsics,
            Error::BelowMinDepth { .. } => ErrorCode::BelowMinDepth,
            Error::TooClose => ErrorCode::TooClose,
            Error::DegeneratePrefactor => ErrorCode::DegeneratePrefactor,
            Error::OutOfSubimage { .. } => ErrorCode::OutOfSubimage,
            Error::NoIntersection => ErrorCode::NoIntersection,
            Error::DegenerateOrientation => ErrorCode::DegenerateOrientation,
            Error::InvalidScene(_) => ErrorCode::InvalidScene,
            Error::Config(_) => ErrorCode::Config,
            Error::Parse(_) => ErrorCode::Parse,
            Error::Io(_) | Error::Csv(_) | Error::Image(_) => ErrorCode::Io,
        }
    }
}
