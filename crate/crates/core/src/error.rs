use thiserror::Error;

/// Errors produced by the geometry and grid kernels.
///
/// The variants are grouped by the exit-code class the CLI maps them to:
/// configuration (2), I/O and format (3), geometry (4), degenerate joint (5).
#[derive(Debug, Error)]
pub enum Error {
    // --- configuration ---
    #[error("invalid configuration: {0}")]
    Config(String),

    // --- I/O and formats ---
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("value domain error: {0}")]
    ValueDomain(String),

    // --- geometry ---
    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("mesh is not watertight: {0}")]
    OpenMesh(String),
    #[error("empty surface: {0}")]
    EmptySurface(String),
    #[error("zero-length normal at vertex {0}")]
    ZeroNormal(usize),
    #[error("clip produced an empty mesh")]
    EmptyClip,
    #[error(
        "mesh penetrates the confining surface at start: {vertex_count} vertices below clearance"
    )]
    InitialPenetration { vertex_count: usize },
    #[error("grid is not a signed distance field: {0}")]
    FieldDomain(String),
    #[error("sigma {sigma_mm} mm is below half the smallest spacing {min_spacing_mm} mm")]
    Resolution { sigma_mm: f64, min_spacing_mm: f64 },
    #[error("mask has undefined distance-field sign: {0}")]
    UndefinedSign(String),

    // --- degenerate joint / data ---
    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),
    #[error("cannot split mask into left and right: {0}")]
    SplitAmbiguity(String),
    #[error("degenerate joint: {0}")]
    DegenerateJoint(String),
}

impl Error {
    /// Exit-code class used by the CLI: 2 config, 3 i/o, 4 geometry, 5 degenerate.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Format(_) | Error::ValueDomain(_) => 3,
            Error::GeometryMismatch(_)
            | Error::OpenMesh(_)
            | Error::EmptySurface(_)
            | Error::ZeroNormal(_)
            | Error::EmptyClip
            | Error::InitialPenetration { .. }
            | Error::FieldDomain(_)
            | Error::Resolution { .. }
            | Error::UndefinedSign(_) => 4,
            Error::DegenerateHistogram(_)
            | Error::SplitAmbiguity(_)
            | Error::DegenerateJoint(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
