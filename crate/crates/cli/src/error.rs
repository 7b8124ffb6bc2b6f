use refine_core::metrics::MetricsError;
use refine_core::pipeline::RefineError;
use refine_core::raster::RasterError;
use refine_core::synth::SynthError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or an inconsistent request.
    #[error("{0}")]
    Usage(String),
    /// Rasters whose dimensions do not line up.
    #[error("{0}")]
    Shape(String),
    /// File system, decode or encode failure.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Shape(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl From<RasterError> for CliError {
    fn from(e: RasterError) -> Self {
        match e {
            RasterError::DimensionMismatch { .. } => CliError::Shape(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<RefineError> for CliError {
    fn from(e: RefineError) -> Self {
        CliError::Shape(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::DimensionMismatch { .. } => CliError::Shape(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
