use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrarError {
    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{path}:{line}: expected {expected} joints, found {found}")]
    JointCount {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("crop for `{person_id}` frame {frame_index} is {actual:?}, box requires {expected:?}")]
    CropDimensions {
        person_id: String,
        frame_index: u32,
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("invalid track: {0}")]
    InvalidTrack(String),

    #[error("degenerate bounding box at frame {frame_index}: {width}x{height} px")]
    DegenerateBox { frame_index: u32, width: f64, height: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("grid needs at least one cell")]
    EmptyGrid,

    #[error("grid canvas {width}x{height} exceeds limit {max_width}x{max_height}; use fewer key poses")]
    CanvasTooLarge {
        width: u32,
        height: u32,
        max_width: u32,
        max_height: u32,
    },

    #[error("no crop for key-pose frame {0}")]
    MissingCrop(u32),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("feature dimension {actual} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training needs at least two classes, found {0}")]
    TooFewClasses(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T, E = GrarError> = std::result::Result<T, E>;

impl GrarError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GrarError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        GrarError::Image {
            path: path.into(),
            source,
        }
    }
}
