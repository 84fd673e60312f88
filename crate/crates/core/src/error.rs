//! Error type shared by every module in the crate.

use alloc::string::String;

/// Everything that can go wrong outside of I/O (which lives in the companion
/// crate). Variants are deliberately specific so callers can branch on them.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("latent dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("grid shape {rows}x{cols} does not cover {len} entries")]
    InvalidShape {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("time {0} outside the valid range")]
    TimeOutOfRange(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),

    #[error("latent norm below the 1e-12 floor")]
    ZeroLatentNorm,

    #[error("reference vector is parallel to the latent; orthogonal direction undefined")]
    DegenerateDirection,

    #[error("unknown activation `{0}` (expected tanh, gelu, or relu)")]
    UnknownActivation(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(&'static str),

    #[error("anchor history holds fewer than two anchors")]
    InsufficientHistory,

    #[error("anchor times coincide; extrapolation undefined")]
    CoincidentAnchors,

    #[error("stable-phase detection needs at least 3 consecutive full-step decompositions")]
    TraceTooShort,

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    #[error("training diverged (non-finite loss) at iteration {iteration}")]
    TrainingDiverged { iteration: usize },

    #[error("metric requires matching grid shapes")]
    ShapeMismatch,

    #[error("grid smaller than the 7x7 ssim window")]
    GridTooSmall,

    #[error("baseline has zero dynamic range; ssim normalization undefined")]
    FlatBaseline,

    #[error("baseline norm is zero; relative metric undefined")]
    ZeroBaselineNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
