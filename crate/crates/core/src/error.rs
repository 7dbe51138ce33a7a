use thiserror::Error;

/// Crate-wide error type. Variants are grouped by layer; the CLI maps
/// `Config` and `Argument` to its usage exit code and everything else to
/// the runtime-failure code.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong length for the requested operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A NaN or infinity showed up where only finite values are allowed.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// A scalar argument was outside its documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A config file or config field failed to parse or validate.
    #[error("invalid config: {0}")]
    Config(String),

    /// An operation that needs at least one sample got none.
    #[error("empty batch in {0}")]
    EmptyBatch(&'static str),

    /// The curvature estimate gave a non-positive g^T F^-1 g, so no step
    /// size can be derived this iteration.
    #[error("degenerate curvature: g^T F^-1 g = {value:.3e}")]
    DegenerateCurvature { value: f64 },

    /// The scripted expert kept failing the success predicate.
    #[error("expert produced no successful episode in {attempts} attempts ({task})")]
    ExpertFailed { task: String, attempts: usize },

    /// The expert does not exist for this task.
    #[error("no scripted expert for task {0}")]
    ExpertUnsupported(String),

    /// Demo file carries a version tag this build does not read.
    #[error("demo file {path}: unsupported version {found:?} (expected \"v1\")")]
    DemoVersion { path: String, found: String },

    /// Demo file ended early or a header field failed to parse.
    #[error("demo file {path}: truncated or malformed ({detail})")]
    DemoTruncated { path: String, detail: String },

    /// Demo file dimensions disagree with the consumer.
    #[error("demo dimension mismatch in {context}: file has obs {file_obs}/act {file_act}, expected obs {want_obs}/act {want_act}")]
    DemoDimMismatch {
        context: &'static str,
        file_obs: usize,
        file_act: usize,
        want_obs: usize,
        want_act: usize,
    },

    /// Demo file was recorded under a different environment config.
    #[error("demo config hash mismatch: file recorded under {file_hash}, current env is {want_hash}")]
    DemoConfigMismatch { file_hash: String, want_hash: String },

    /// Replaying a stored action sequence did not reproduce the stored
    /// observations and rewards.
    #[error("demo replay diverged at trajectory {index}, step {step}")]
    DemoReplay { index: usize, step: usize },

    /// Checkpoint file failed to parse or disagrees with the requested shape.
    #[error("checkpoint {path}: {detail}")]
    Checkpoint { path: String, detail: String },

    /// Output artifacts already exist and resume was not requested.
    #[error("output directory {0} already exists (pass resume to continue into it)")]
    OutputExists(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad user input rather than a failure at
    /// runtime; the CLI uses this to pick its exit code.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Argument(_))
    }
}
