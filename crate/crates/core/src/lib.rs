//! Joint estimation of a directional interferer's direction of arrival and
//! the noise covariance matrix of a multichannel sound field, with LCMV /
//! MVDR / LCMP beamforming and a per-bin MUSIC baseline.
//!
//! The crate is organized around the processing pipeline:
//!
//! - [`geometry`]: sensor arrays, steering vectors, pseudo-normalized
//!   covariance models;
//! - [`stft`] / [`wav`]: analysis, synthesis, weight application, audio I/O;
//! - [`covariance`]: sample covariance and the modeled covariance assembly;
//! - [`solver`]: per-bin nonnegative variance solve via active-set
//!   enumeration (at most 16 reduced solves per bin);
//! - [`doa`]: broadband cost, analytic gradients, gradient descent, and the
//!   alternating joint estimation scheme;
//! - [`beamform`]: LCMV, MVDR and LCMP weights;
//! - [`music`]: per-bin MUSIC with broadband phasor averaging (MSC / wMSC);
//! - [`scenario`]: synthetic desk-scale scenes with per-component ground
//!   truth;
//! - [`metrics`]: enhancement and theoretical metrics plus sweep statistics;
//! - [`export`]: binary + JSON sidecar dumps for matrices and solver state.

pub mod beamform;
pub mod covariance;
pub mod doa;
pub mod error;
pub mod export;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod music;
pub mod scenario;
pub mod solver;
pub mod stft;
pub mod wav;

pub use error::{CoreError, Result};
