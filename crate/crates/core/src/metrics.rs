//! Enhancement metrics (gSNR, gSIR, ISRF, DSRF), theoretical metrics
//! (DF, WNG), angular error, and boxplot statistics for sweep aggregation.
//!
//! All signal metrics are measured in the time domain on per-component
//! signals passed through the same analysis-weights-synthesis chain, with
//! the reference signal defined as the reference-sensor selector output of
//! that chain. This keeps the identity-filter case exactly 0 dB and makes
//! per-component filtering exactly linear.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamform::BeamformerWeights;
use crate::error::{CoreError, Result};
use crate::geometry::{Doa, PseudoCovariance};
use crate::stft::{apply_weights, istft, stft, SpectralFrames, StftConfig};

/// dB floor/cap for infinity-coded ratios in exports.
pub const DB_FLOOR: f64 = -120.0;
pub const DB_CAP: f64 = 120.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnhancementReport {
    pub scenario_id: String,
    pub method: String,
    pub gsnr_db: f64,
    pub gsir_db: f64,
    pub isrf_db: f64,
    pub dsrf_db: f64,
    pub df_db: f64,
    pub wng_db: f64,
    pub angle_err_deg: f64,
    /// Any ratio hit the +-120 dB coding (a perfectly nulled component).
    pub clipped: bool,
}

/// Reference and filtered time-domain signals for each metric component.
#[derive(Debug, Clone)]
pub struct ComponentSignals {
    /// Desired direct path at the reference / filtered.
    pub x1: Vec<f64>,
    pub x_f: Vec<f64>,
    /// Full interfering signal (all its planar waves).
    pub n1: Vec<f64>,
    pub n_f: Vec<f64>,
    /// Interferer direct path.
    pub p1: Vec<f64>,
    pub p_f: Vec<f64>,
    /// Global noise (everything but the desired direct path).
    pub eta1: Vec<f64>,
    pub eta_f: Vec<f64>,
}

fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Run a multichannel component through analysis, weights and synthesis.
pub fn filter_component(
    chans: &[Vec<f64>],
    weights: &BeamformerWeights,
    cfg: &StftConfig,
) -> Result<Vec<f64>> {
    let frames = stft(chans, cfg)?;
    filter_frames(&frames, weights, cfg)
}

/// Same, starting from already-available frames.
pub fn filter_frames(
    frames: &SpectralFrames,
    weights: &BeamformerWeights,
    cfg: &StftConfig,
) -> Result<Vec<f64>> {
    let mut out = apply_weights(frames, &weights.bins)?;
    zero_dc(&mut out);
    istft(out.view(), cfg)
}

/// Reference-sensor version of a component through the same chain.
pub fn reference_component(
    chans: &[Vec<f64>],
    reference: usize,
    cfg: &StftConfig,
) -> Result<Vec<f64>> {
    let frames = stft(chans, cfg)?;
    reference_frames(&frames, reference, cfg)
}

pub fn reference_frames(
    frames: &SpectralFrames,
    reference: usize,
    cfg: &StftConfig,
) -> Result<Vec<f64>> {
    let mut chan: Array2<Complex64> = frames.channel(reference).to_owned();
    zero_dc(&mut chan);
    istft(chan.view(), cfg)
}

/// Band discipline shared by every metric path: the DC bin carries no
/// spatial information (all steering vectors are all-ones there, so no
/// null is definable), matching the estimator's bin range. Zeroing it in
/// both the filtered and the reference chains keeps comparisons exact.
fn zero_dc(frames: &mut Array2<Complex64>) {
    for l in 0..frames.shape()[0] {
        frames[(l, 0)] = Complex64::new(0.0, 0.0);
    }
}

fn ratio_db(num: f64, den: f64) -> (f64, bool) {
    if den <= 0.0 && num <= 0.0 {
        return (0.0, true);
    }
    if den <= 0.0 {
        return (DB_CAP, true);
    }
    if num <= 0.0 {
        return (DB_FLOOR, true);
    }
    let db = 10.0 * (num / den).log10();
    if db > DB_CAP {
        (DB_CAP, true)
    } else if db < DB_FLOOR {
        (DB_FLOOR, true)
    } else {
        (db, false)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnhancementNumbers {
    pub gsnr_db: f64,
    pub gsir_db: f64,
    pub isrf_db: f64,
    pub dsrf_db: f64,
    pub clipped: bool,
}

/// Time-domain enhancement metrics from per-component signals:
/// gSNR = (var x_f / var eta_f) * (var eta_1 / var x_1), gSIR the analogue
/// with the full interferer, ISRF = var p_1 / var p_f and
/// DSRF = var x_1 / var x_f.
pub fn enhancement_metrics(sig: &ComponentSignals) -> EnhancementNumbers {
    let vx1 = variance(&sig.x1);
    let vxf = variance(&sig.x_f);
    let vn1 = variance(&sig.n1);
    let vnf = variance(&sig.n_f);
    let vp1 = variance(&sig.p1);
    let vpf = variance(&sig.p_f);
    let ve1 = variance(&sig.eta1);
    let vef = variance(&sig.eta_f);
    let (gsnr_db, c1) = ratio_db(vxf * ve1, vef * vx1);
    let (gsir_db, c2) = ratio_db(vxf * vn1, vnf * vx1);
    let (isrf_db, c3) = ratio_db(vp1, vpf);
    let (dsrf_db, c4) = ratio_db(vx1, vxf);
    EnhancementNumbers {
        gsnr_db,
        gsir_db,
        isrf_db,
        dsrf_db,
        clipped: c1 || c2 || c3 || c4,
    }
}

/// Broadband directivity factor and white-noise gain in dB:
/// DF = K / sum_k h^H Gamma h, WNG = K / sum_k h^H h.
pub fn theoretical_metrics(weights: &BeamformerWeights, isotropic: &PseudoCovariance) -> (f64, f64) {
    let k_total = weights.num_bins() as f64;
    let mut df_den = 0.0;
    let mut wng_den = 0.0;
    for (k, h) in weights.bins.iter().enumerate() {
        let gamma = &isotropic.bins[k];
        let m = h.len();
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                quad += h[i].conj() * gamma[(i, j)] * h[j];
            }
        }
        df_den += quad.re;
        wng_den += h.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let df_db = 10.0 * (k_total / df_den.max(f64::MIN_POSITIVE)).log10();
    let wng_db = 10.0 * (k_total / wng_den.max(f64::MIN_POSITIVE)).log10();
    (df_db, wng_db)
}

/// Angular error between two directions via their unit vectors, in degrees.
pub fn angular_error_deg(a: Doa, b: Doa) -> f64 {
    let ua = a.unit_vector();
    let ub = b.unit_vector();
    let dot: f64 = ua.iter().zip(ub.iter()).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos().to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub p9: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p91: f64,
}

/// Linear-interpolated (type-7) quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (n - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Boxplot quantiles at {9, 25, 50, 75, 91} percent.
pub fn boxplot_stats(samples: &[f64]) -> Result<BoxplotStats> {
    if samples.is_empty() {
        return Err(CoreError::EmptyInput("boxplot_stats: no samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(BoxplotStats {
        p9: quantile_sorted(&sorted, 0.09),
        p25: quantile_sorted(&sorted, 0.25),
        p50: quantile_sorted(&sorted, 0.50),
        p75: quantile_sorted(&sorted, 0.75),
        p91: quantile_sorted(&sorted, 0.91),
    })
}

/// Median convenience for acceptance comparisons.
pub fn median(samples: &[f64]) -> f64 {
    boxplot_stats(samples).map(|b| b.p50).unwrap_or(f64::NAN)
}
