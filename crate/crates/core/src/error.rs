//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants are specific
//! enough that callers (and the CLI) can report what went wrong without
//! string matching.

use std::path::PathBuf;

/// Errors produced by decoding, feature extraction, model fitting and
/// report assembly.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- file and WAV decoding ----
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: not a RIFF/WAVE file")]
    NotWav(PathBuf),
    #[error("unsupported WAV format tag {0}; only PCM (tag 1) is supported")]
    NonPcmEncoding(u16),
    #[error("unsupported bit depth {0}; only 8 and 16 bit PCM are supported")]
    UnsupportedBitDepth(u16),
    #[error("unsupported channel count {0}; expected mono or stereo")]
    UnsupportedChannels(u16),
    #[error("invalid sample rate {0}")]
    InvalidSampleRate(u32),
    #[error("missing {0} chunk")]
    MissingChunk(&'static str),
    #[error("truncated data chunk: header declares {declared} bytes, {present} present")]
    TruncatedData { declared: usize, present: usize },
    #[error("audio clip contains no samples")]
    EmptyClip,

    // ---- manifests and stored models ----
    #[error("manifest parse error: {0}")]
    ManifestParse(String),
    #[error("manifest lists no clips")]
    EmptyManifest,
    #[error("duplicate sequence index {0} in manifest")]
    DuplicateSequenceIndex(u32),
    #[error("duplicate clip path {0:?} in manifest")]
    DuplicateClipPath(String),
    #[error("unknown position label {0:?}")]
    UnknownPosition(String),
    #[error("unknown gender label {0:?}")]
    UnknownGenderLabel(String),
    #[error("model parse error: {0}")]
    ModelParse(String),

    // ---- framing and signal kernels ----
    #[error("invalid framing: frame_len {frame_len}, hop {hop}")]
    InvalidFraming { frame_len: usize, hop: usize },
    #[error("frame length {frame_len} exceeds clip length {clip_len}")]
    FrameTooLong { frame_len: usize, clip_len: usize },
    #[error("frame of {0} samples is too short")]
    FrameTooShort(usize),
    #[error("window length {0} is too short; need at least 2 samples")]
    WindowTooShort(usize),
    #[error("median filter window must be odd, got {0}")]
    EvenMedianWindow(usize),
    #[error("autocorrelation max_lag {max_lag} out of range for frame of {frame_len} samples")]
    LagOutOfRange { max_lag: usize, frame_len: usize },

    // ---- feature extraction ----
    #[error("negative frequency {0} Hz")]
    NegativeFrequency(f64),
    #[error("parameter {0} must be finite")]
    NonFinite(&'static str),
    #[error("linear prediction order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("linear prediction order {order} too high for {bands} filter bands")]
    OrderTooHigh { order: usize, bands: usize },
    #[error("linear prediction failed: non-positive residual energy")]
    UnstablePrediction,

    // ---- model training and classification ----
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training requires at least {need} vectors, got {got}")]
    TooFewVectors { got: usize, need: usize },
    #[error("component count must be at least 1, got {0}")]
    InvalidComponentCount(usize),
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("k must be odd, got {0}")]
    EvenK(usize),
    #[error("k = {k} exceeds training set size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("{points} points but {labels} labels")]
    LabelMismatch { points: usize, labels: usize },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("{folds} folds exceed {n} points")]
    TooManyFolds { folds: usize, n: usize },

    // ---- statistics ----
    #[error("empty input")]
    EmptyInput,
    #[error("contingency table must be at least 2x2")]
    TableTooSmall,
    #[error("zero {kind} total at index {index} in contingency table")]
    ZeroMarginal { kind: &'static str, index: usize },
    #[error("operation requires a 2x2 table, got {rows}x{cols}")]
    NotTwoByTwo { rows: usize, cols: usize },
    #[error("bin width must be positive and finite, got {0}")]
    InvalidBinWidth(f64),
    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    // ---- pipeline ----
    #[error("localization requires exactly one clip per quadrant")]
    QuadrantCoverage,
    #[error("localization is ambiguous: maximal quadrant levels tie")]
    AmbiguousLocalization,
    #[error("correlation requires at least {need} lecture records, got {got}")]
    TooFewRecords { got: usize, need: usize },

    // ---- synthesis ----
    #[error("amplitude {0} outside [0, 1]")]
    InvalidAmplitude(f64),
    #[error("duration {0} s is not positive")]
    InvalidDuration(f64),
    #[error("frequency {freq} Hz must lie in (0, {nyquist}) for this sample rate")]
    FrequencyOutOfRange { freq: f64, nyquist: f64 },
    #[error("fundamental {f0} Hz outside the speech range [{min}, {max}]")]
    PitchOutOfRange { f0: f64, min: f64, max: f64 },
    #[error("target level {target} dBA needs amplitude above full scale (max {max:.1} dBA)")]
    TargetLevelUnreachable { target: f64, max: f64 },
    #[error("invalid corpus configuration: {0}")]
    CorpusConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
