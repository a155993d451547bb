use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box ({0}, {1}, {2}, {3})")]
    InvalidBox(f64, f64, f64, f64),

    #[error("cannot take the union of an empty box list")]
    EmptyBoxList,

    #[error("box collapses to zero area after clipping to the page")]
    DegenerateBox,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed VOC annotation: {0}")]
    MalformedVoc(String),

    #[error("unknown layout class '{0}'")]
    UnknownClass(String),

    #[error("box of element {index} lies outside the {width}x{height} page")]
    BoxOutsidePage {
        index: usize,
        width: u32,
        height: u32,
    },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("detection interchange error: {0}")]
    Interchange(String),

    #[error("dataset too small: {0}")]
    DatasetTooSmall(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("affine transform is singular")]
    SingularTransform,

    #[error("reference text is empty")]
    EmptyReference,

    #[error("baseline rate is zero; improvement is undefined")]
    ZeroBaseline,

    #[error("no ground-truth elements to evaluate")]
    EmptyGroundTruth,

    #[error("OCR engine failure: {0}")]
    Engine(String),

    #[error("scenario validation failed: {0}")]
    Scenario(String),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
