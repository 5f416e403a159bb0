//! STFT analysis / synthesis and per-bin weight application.
//!
//! Analysis uses a periodic (DFT-even) Hamming window at 50% overlap,
//! whose shifted sum is the exact constant 1.08; synthesis is plain
//! overlap-add of inverse DFTs divided by that constant, so interior
//! samples reconstruct to machine precision.

use ndarray::{Array2, Array3, ArrayView2};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::CVec;

/// Shifted-window sum of the periodic Hamming at 50% overlap.
pub const HAMMING_COLA_SUM: f64 = 1.08;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub frame_len: usize,
    pub hop: usize,
    #[serde(skip, default)]
    window: Vec<f64>,
}

impl StftConfig {
    /// Periodic Hamming window, hop = N/2.
    pub fn hamming_half_overlap(frame_len: usize) -> Result<Self> {
        if frame_len < 4 || frame_len % 2 != 0 {
            return Err(CoreError::InvalidConfig(format!(
                "frame length {frame_len} must be even and >= 4"
            )));
        }
        Ok(Self {
            frame_len,
            hop: frame_len / 2,
            window: periodic_hamming(frame_len),
        })
    }

    /// Retained one-sided bins: N/2 + 1.
    pub fn num_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Rebuild the window after deserialization.
    pub fn materialized(mut self) -> Result<Self> {
        if self.hop * 2 != self.frame_len {
            return Err(CoreError::InvalidConfig(format!(
                "hop {} must be half of frame length {}",
                self.hop, self.frame_len
            )));
        }
        if self.window.len() != self.frame_len {
            self.window = periodic_hamming(self.frame_len);
        }
        Ok(self)
    }

    /// Number of full frames available in a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }
}

fn periodic_hamming(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.54 - 0.46 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// Complex STFT tensor indexed `[sensor][frame][bin]`.
#[derive(Debug, Clone)]
pub struct SpectralFrames {
    pub config: StftConfig,
    pub data: Array3<Complex64>,
}

impl SpectralFrames {
    pub fn num_channels(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn num_frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn num_bins(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn channel(&self, c: usize) -> ArrayView2<'_, Complex64> {
        self.data.index_axis(ndarray::Axis(0), c)
    }

    /// Snapshot across channels at (frame l, bin k).
    pub fn snapshot(&self, l: usize, k: usize) -> CVec {
        CVec::from_iter((0..self.num_channels()).map(|m| self.data[(m, l, k)]))
    }

    pub fn zeros_like(&self) -> SpectralFrames {
        SpectralFrames {
            config: self.config.clone(),
            data: Array3::zeros(self.data.raw_dim()),
        }
    }
}

/// Multichannel STFT. Frame `l` covers samples `[l*hop, l*hop + N)` and the
/// one-sided spectrum of N/2 + 1 bins is retained.
pub fn stft(signals: &[Vec<f64>], cfg: &StftConfig) -> Result<SpectralFrames> {
    if signals.is_empty() {
        return Err(CoreError::EmptyInput("stft: no channels"));
    }
    let len = signals[0].len();
    for (c, s) in signals.iter().enumerate() {
        if s.len() != len {
            return Err(CoreError::ChannelLengthMismatch {
                channel: c,
                got: s.len(),
                expected: len,
            });
        }
    }
    if len < cfg.frame_len {
        return Err(CoreError::SignalTooShort {
            got: len,
            frame_len: cfg.frame_len,
        });
    }
    let n = cfg.frame_len;
    let frames = cfg.num_frames(len);
    let bins = cfg.num_bins();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut data = Array3::zeros((signals.len(), frames, bins));
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (c, sig) in signals.iter().enumerate() {
        for l in 0..frames {
            let start = l * cfg.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(sig[start + i] * cfg.window[i], 0.0);
            }
            fft.process(&mut buf);
            for k in 0..bins {
                data[(c, l, k)] = buf[k];
            }
        }
    }
    Ok(SpectralFrames {
        config: cfg.clone(),
        data,
    })
}

/// Single-channel inverse STFT by overlap-add, normalized by the constant
/// window sum. Interior samples (one hop in from each edge) reconstruct the
/// original signal; edge samples only see partial overlap.
pub fn istft(frames: ArrayView2<'_, Complex64>, cfg: &StftConfig) -> Result<Vec<f64>> {
    let n = cfg.frame_len;
    let bins = cfg.num_bins();
    if frames.shape()[1] != bins {
        return Err(CoreError::DimensionMismatch(format!(
            "istft: {} bins in frames, config expects {}",
            frames.shape()[1],
            bins
        )));
    }
    let num_frames = frames.shape()[0];
    if num_frames == 0 {
        return Err(CoreError::EmptyInput("istft: no frames"));
    }
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);
    let mut out = vec![0.0; (num_frames - 1) * cfg.hop + n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..num_frames {
        buf[0] = frames[(l, 0)];
        for k in 1..bins - 1 {
            buf[k] = frames[(l, k)];
            buf[n - k] = frames[(l, k)].conj();
        }
        buf[n / 2] = frames[(l, bins - 1)];
        ifft.process(&mut buf);
        let start = l * cfg.hop;
        for i in 0..n {
            // rustfft's inverse is unnormalized; divide by N here and by
            // the window overlap constant once.
            out[start + i] += buf[i].re / (n as f64 * HAMMING_COLA_SUM);
        }
    }
    Ok(out)
}

/// Apply per-bin beamformer weights: output[l, k] = h[k]^H y[:, l, k].
pub fn apply_weights(frames: &SpectralFrames, weights: &[CVec]) -> Result<Array2<Complex64>> {
    let m = frames.num_channels();
    let bins = frames.num_bins();
    if weights.len() != bins {
        return Err(CoreError::DimensionMismatch(format!(
            "apply_weights: {} weight vectors for {} bins",
            weights.len(),
            bins
        )));
    }
    for (k, w) in weights.iter().enumerate() {
        if w.len() != m {
            return Err(CoreError::DimensionMismatch(format!(
                "apply_weights: weight vector at bin {k} has length {}, expected {m}",
                w.len()
            )));
        }
    }
    let frames_n = frames.num_frames();
    let mut out = Array2::zeros((frames_n, bins));
    for l in 0..frames_n {
        for k in 0..bins {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..m {
                acc += weights[k][s].conj() * frames.data[(s, l, k)];
            }
            out[(l, k)] = acc;
        }
    }
    Ok(out)
}

/// Interior sample range with full overlap coverage, for reconstruction
/// comparisons.
pub fn interior_range(cfg: &StftConfig, num_frames: usize) -> std::ops::Range<usize> {
    cfg.hop..num_frames * cfg.hop
}
