use std::path::PathBuf;

/// Errors produced by the measurement pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("invalid homography: {0}")]
    InvalidHomography(String),
    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("not enough matches: {found} (need {needed})")]
    NotEnoughMatches { found: usize, needed: usize },
    #[error("no consensus model with at least 4 inliers")]
    NoConsensus,
    #[error("registration of views {a} and {b} failed: {source}")]
    Registration {
        a: usize,
        b: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("foreground is empty after segmentation")]
    EmptyForeground,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point lies outside the element")]
    OutsideElement,
    #[error("degenerate element: {0}")]
    DegenerateElement(String),
    #[error("self-intersecting polygon")]
    SelfIntersecting,
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
