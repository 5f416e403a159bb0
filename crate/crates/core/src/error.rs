//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by geometry, transform, solver and simulation code.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("degenerate geometry: sensors {0} and {1} occupy the same position")]
    CoincidentSensors(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("channel {channel} has {got} samples, expected {expected}")]
    ChannelLengthMismatch {
        channel: usize,
        got: usize,
        expected: usize,
    },

    #[error("signal has {got} samples, shorter than one frame of {frame_len}")]
    SignalTooShort { got: usize, frame_len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "degenerate normal system at bin {bin}: components {first} and {second} are \
         numerically collinear (condition {condition:.3e})"
    )]
    DegenerateSystem {
        bin: usize,
        first: &'static str,
        second: &'static str,
        condition: f64,
    },

    #[error("constraint collision at bin {bin}: interferer steering coincides with the desired steering")]
    ConstraintCollision { bin: usize },

    #[error("assumed source count {sources} leaves no noise subspace on {sensors} sensors")]
    NoNoiseSubspace { sources: usize, sensors: usize },

    #[error("no valid bins available for the broadband phasor average")]
    NoValidBins,

    #[error("negative variance input: component {component} = {value}")]
    NegativeVariance { component: &'static str, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("unsupported sample rate {found} Hz, expected {expected} Hz (resampling is out of scope)")]
    SampleRate { found: u32, expected: u32 },

    #[error("wav: {0}")]
    Wav(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
