use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("homography is singular (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("point ({x}, {y}) maps onto the horizon line")]
    Horizon { x: f64, y: f64 },

    #[error("horizon line crosses the {width}x{height} output raster")]
    HorizonCrossesRaster { width: usize, height: usize },

    #[error("point ({x}, {y}) is outside the {width}x{height} table extent")]
    OutOfExtent {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("image extent must be positive, got {width}x{height}")]
    ZeroExtent { width: usize, height: usize },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("reference image is all zero, PSNR is undefined")]
    DegenerateReference,

    #[error("no admissible homography triple found for seed {seed} after {attempts} attempts")]
    NoAdmissibleTriple { seed: u64, attempts: usize },

    #[error("malformed image data: {0}")]
    Format(String),

    #[error("unsupported bit depth: {0}")]
    UnsupportedDepth(String),

    #[error("invalid {what} token `{token}`")]
    InvalidToken { what: &'static str, token: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 data, 3 numeric/degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidToken { .. } | Error::InvalidConfig(_) => 1,
            Error::Format(_)
            | Error::UnsupportedDepth(_)
            | Error::Io { .. }
            | Error::DimensionMismatch(..)
            | Error::ZeroExtent { .. } => 2,
            Error::Singular { .. }
            | Error::Horizon { .. }
            | Error::HorizonCrossesRaster { .. }
            | Error::OutOfExtent { .. }
            | Error::DegenerateReference
            | Error::NoAdmissibleTriple { .. } => 3,
        }
    }
}
