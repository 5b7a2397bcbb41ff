use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // masks and geometry
    #[error("invalid mask dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("mask has {actual} values, expected {expected}")]
    BitCountMismatch { expected: usize, actual: usize },
    #[error("mask value {0} is not 0 or 1")]
    InvalidBit(u8),
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("run lengths sum to {actual}, expected {expected}")]
    RunSumMismatch { expected: usize, actual: usize },
    #[error("run {index} is zero; only the first run may be empty")]
    ZeroRun { index: usize },
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("empty input")]
    EmptyInput,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("invalid bounding box ({0})")]
    InvalidBox(String),

    // diversity
    #[error("reference mask has no foreground pixels")]
    EmptyReference,
    #[error("annotation index {index} out of range ({len} masks)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("image {image_id} has {available} annotations, {required} required")]
    InsufficientAnnotations {
        image_id: String,
        available: usize,
        required: usize,
    },

    // ambiguity scoring
    #[error("expected 5 votes, got {0}")]
    WrongVoteCount(usize),
    #[error("worker {0} voted more than once")]
    DuplicateWorker(String),
    #[error("votes refer to more than one image")]
    MixedImages,
    #[error("need at least {required} masks, got {actual}")]
    TooFewMasks { required: usize, actual: usize },
    #[error("image is {width}x{height}, minimum is 8x8")]
    ImageTooSmall { width: usize, height: usize },
    #[error("PCA target {target} exceeds limit {limit}")]
    TargetTooLarge { target: usize, limit: usize },
    #[error("vector length {actual}, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("only one class present")]
    SingleClass,
    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("non-finite score for image {0}")]
    NonFiniteScore(String),
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("no detection windows")]
    NoWindows,
    #[error("invalid subitizing distribution for {image_id}: {reason}")]
    InvalidDistribution { image_id: String, reason: String },

    // allocation
    #[error("no score for image {0}")]
    MissingScore(String),
    #[error("annotation pool needs at least 2 masks, got {0}")]
    PoolTooSmall(usize),
    #[error("thresholds must be sorted ascending and lie in [0, 1]")]
    InvalidThresholds,

    // evaluation
    #[error("id sets differ (first mismatch: {0})")]
    IdMismatch(String),
    #[error("ground truth set is empty")]
    EmptyGroundTruthSet,
    #[error("nothing to report")]
    EmptyReport,

    // collection service
    #[error("worker {0} is not eligible")]
    IneligibleWorker(String),
    #[error("unknown task {0}")]
    UnknownTask(u64),
    #[error("unknown batch {0}")]
    UnknownBatch(u64),
    #[error("task {task_id} is a {actual} task")]
    WrongKind { task_id: u64, actual: String },
    #[error("task {task_id} is not assigned to worker {worker_id}")]
    NotAssigned { task_id: u64, worker_id: String },
    #[error("task has {expected} images, got {actual} votes")]
    VoteCountMismatch { expected: usize, actual: usize },
    #[error("image {0} already has 5 votes")]
    VoteCapReached(String),
    #[error("image {image_id} already has {cap} annotations")]
    AnnotationCapReached { image_id: String, cap: usize },
    #[error("exactly one polygon is required, got {0}")]
    MultiplePolygons(usize),
    #[error("polygon covers no pixel centers")]
    EmptyRasterization,
    #[error("image {0} has no annotation yet")]
    RoundOneIncomplete(String),
    #[error("adaptive round already run for batch {0}")]
    RoundAlreadyRun(u64),
    #[error("image file missing: {0}")]
    MissingImage(PathBuf),
    #[error("duplicate image id {0}")]
    DuplicateImage(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("image decode error: {0}")]
    Image(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
