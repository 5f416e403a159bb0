//! Observed sample covariance and the modeled covariance assembly.
//!
//! The modeled observed covariance is a nonnegative combination of four
//! known pseudo-normalized structures plus a small diagonal regularizer:
//!
//! `R_model = Rx s2x + Rp s2p + Rg s2g + Rv s2v + eps I`
//!
//! and the global noise covariance drops the desired-signal term.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::geometry::PseudoCovariance;
use crate::linalg::{identity, CMat};
use crate::stft::SpectralFrames;

/// Fixed component ordering used by the variance solver: (x, p, gamma, v).
pub const NUM_COMPONENTS: usize = 4;
pub const COMPONENT_NAMES: [&str; NUM_COMPONENTS] = ["desired", "interferer", "isotropic", "white"];

/// Per-bin variance 4-vectors in the fixed (x, p, gamma, v) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variances {
    pub per_bin: Vec<[f64; NUM_COMPONENTS]>,
}

impl Variances {
    pub fn zeros(bins: usize) -> Self {
        Self {
            per_bin: vec![[0.0; NUM_COMPONENTS]; bins],
        }
    }

    pub fn num_bins(&self) -> usize {
        self.per_bin.len()
    }

    /// Interferer variance spectrum (sigma^2_p per bin).
    pub fn interferer_power(&self) -> Vec<f64> {
        self.per_bin.iter().map(|s| s[1]).collect()
    }
}

/// Everything the per-bin fit needs: the observed covariance, the four
/// model components and the regularizer.
#[derive(Debug, Clone)]
pub struct BinCovarianceSet {
    pub r_y: Vec<CMat>,
    pub desired: PseudoCovariance,
    pub interferer: PseudoCovariance,
    pub isotropic: PseudoCovariance,
    pub white: PseudoCovariance,
    pub epsilon: f64,
}

impl BinCovarianceSet {
    pub fn num_bins(&self) -> usize {
        self.r_y.len()
    }

    pub fn num_sensors(&self) -> usize {
        self.r_y[0].nrows()
    }

    /// Component by solver index, in (x, p, gamma, v) order.
    pub fn component(&self, idx: usize) -> &PseudoCovariance {
        match idx {
            0 => &self.desired,
            1 => &self.interferer,
            2 => &self.isotropic,
            3 => &self.white,
            _ => panic!("component index {idx} out of range"),
        }
    }

    /// Epsilon-adjusted observed matrix `R_y - eps I` at bin k.
    pub fn r_y_eps(&self, k: usize) -> CMat {
        let mut m = self.r_y[k].clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= self.epsilon;
        }
        m
    }

    /// Replace the interferer component (the DoA search updates it).
    pub fn set_interferer(&mut self, pc: PseudoCovariance) {
        self.interferer = pc;
    }
}

/// Per-bin global noise covariance matrices.
#[derive(Debug, Clone)]
pub struct NoiseCovariance {
    pub bins: Vec<CMat>,
    pub epsilon: f64,
}

/// Sample covariance per bin: `R_y[k] = (1/L) sum_l y[l,k] y[l,k]^H`.
pub fn sample_covariance(frames: &SpectralFrames) -> Result<Vec<CMat>> {
    let l_total = frames.num_frames();
    if l_total == 0 {
        return Err(CoreError::EmptyInput("sample_covariance: zero frames"));
    }
    let m = frames.num_channels();
    let bins = frames.num_bins();
    let scale = 1.0 / l_total as f64;
    let mut out = Vec::with_capacity(bins);
    for k in 0..bins {
        let mut r = CMat::zeros((m, m));
        for l in 0..l_total {
            for i in 0..m {
                let yi = frames.data[(i, l, k)];
                for j in 0..m {
                    r[(i, j)] += yi * frames.data[(j, l, k)].conj();
                }
            }
        }
        r.mapv_inplace(|z| z * scale);
        // Force exact Hermitian symmetry against accumulation rounding.
        for i in 0..m {
            r[(i, i)] = Complex64::new(r[(i, i)].re, 0.0);
            for j in (i + 1)..m {
                let h = (r[(i, j)] + r[(j, i)].conj()) * 0.5;
                r[(i, j)] = h;
                r[(j, i)] = h.conj();
            }
        }
        out.push(r);
    }
    Ok(out)
}

fn check_nonnegative(sigma: &[f64; NUM_COMPONENTS]) -> Result<()> {
    for (i, &s) in sigma.iter().enumerate() {
        if s < 0.0 {
            return Err(CoreError::NegativeVariance {
                component: COMPONENT_NAMES[i],
                value: s,
            });
        }
    }
    Ok(())
}

/// Modeled observed covariance for one bin.
pub fn model_covariance(
    sigma: &[f64; NUM_COMPONENTS],
    comps: &BinCovarianceSet,
    k: usize,
) -> Result<CMat> {
    check_nonnegative(sigma)?;
    let m = comps.num_sensors();
    let mut out = identity(m);
    out.mapv_inplace(|z| z * comps.epsilon);
    for (idx, &s) in sigma.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let comp = &comps.component(idx).bins[k];
        out.zip_mut_with(comp, |o, c| *o += c * s);
    }
    Ok(out)
}

/// Modeled observed covariance for all bins.
pub fn model_covariance_all(v: &Variances, comps: &BinCovarianceSet) -> Result<Vec<CMat>> {
    v.per_bin
        .iter()
        .enumerate()
        .map(|(k, sigma)| model_covariance(sigma, comps, k))
        .collect()
}

/// Global noise covariance (desired-signal term excluded):
/// `R_eta[k] = Rp s2p + Rg s2g + Rv s2v + eps I`.
pub fn assemble_ncm(v: &Variances, comps: &BinCovarianceSet) -> Result<NoiseCovariance> {
    let m = comps.num_sensors();
    let mut bins = Vec::with_capacity(v.num_bins());
    for (k, sigma) in v.per_bin.iter().enumerate() {
        check_nonnegative(sigma)?;
        let mut out = identity(m);
        out.mapv_inplace(|z| z * comps.epsilon);
        for idx in 1..NUM_COMPONENTS {
            let s = sigma[idx];
            if s == 0.0 {
                continue;
            }
            let comp = &comps.component(idx).bins[k];
            out.zip_mut_with(comp, |o, c| *o += c * s);
        }
        bins.push(out);
    }
    Ok(NoiseCovariance {
        bins,
        epsilon: comps.epsilon,
    })
}
