//! Per-bin MUSIC pseudospectrum on an azimuth grid and the two broadband
//! phasor-averaging estimators (MSC: plain average, wMSC: weighted by the
//! pseudospectrum peak).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::geometry::{wrap_angle, Doa, RelativeGeometry, SensorArray};
use crate::linalg::{hermitian_eigen, CMat};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MusicConfig {
    /// Azimuth grid step in degrees.
    pub grid_step_deg: f64,
    /// Assumed source count (signal-subspace dimension).
    pub source_count: usize,
    /// Bins below this frequency are excluded from broadband averaging;
    /// their steering vectors are near-constant and peaks meaningless.
    pub min_freq_hz: f64,
    /// Minimum angular separation from the desired direction.
    pub separation: f64,
}

impl Default for MusicConfig {
    fn default() -> Self {
        Self {
            grid_step_deg: 1.0,
            source_count: 2,
            min_freq_hz: 100.0,
            separation: 5f64.to_radians(),
        }
    }
}

/// Pseudospectrum of one bin over the azimuth grid covering (-180, 180].
#[derive(Debug, Clone)]
pub struct MusicSpectrum {
    pub bin: usize,
    /// Grid azimuths in radians.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Per-bin interferer estimate: selected peak azimuth and its
/// pseudospectrum value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BinPeak {
    pub theta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AverageMethod {
    Msc,
    WMsc,
}

#[derive(Debug, Clone)]
pub struct BroadbandDoaEstimate {
    pub method: AverageMethod,
    /// Circular-mean azimuth in radians.
    pub theta: f64,
    /// Per-bin selections; None for excluded or invalid bins.
    pub per_bin: Vec<Option<BinPeak>>,
}

/// MUSIC pseudospectrum for one bin: eigendecompose the observed
/// covariance, keep everything beyond the assumed source count as the
/// noise subspace and score 1 / ||E_n^H d(theta)||^2 on the grid.
pub fn music_spectrum(
    r_y_bin: &CMat,
    array: &SensorArray,
    geom: &RelativeGeometry,
    bin: usize,
    cfg: &MusicConfig,
) -> Result<MusicSpectrum> {
    let m = array.num_sensors();
    if cfg.source_count >= m {
        return Err(CoreError::NoNoiseSubspace {
            sources: cfg.source_count,
            sensors: m,
        });
    }
    let (_, vecs) = hermitian_eigen(r_y_bin);
    let steps = (360.0 / cfg.grid_step_deg).round() as usize;
    let alpha = 2.0 * std::f64::consts::PI * array.f0 / (array.bins as f64 * array.c);
    let sensor_geo: Vec<(f64, f64, f64)> = (0..m).map(|s| geom.sensor(s)).collect();
    let mut grid = Vec::with_capacity(steps);
    let mut values = Vec::with_capacity(steps);
    for g in 0..steps {
        let theta_deg = -180.0 + (g + 1) as f64 * cfg.grid_step_deg;
        let theta = theta_deg.to_radians();
        grid.push(theta);
        // Steering vector at (theta, 0) for this bin.
        let d: Vec<Complex64> = sensor_geo
            .iter()
            .map(|&(r, psi, lambda)| {
                let proj = r * (theta - psi).cos() * lambda.cos();
                Complex64::from_polar(1.0, -alpha * bin as f64 * proj)
            })
            .collect();
        let mut denom = 0.0;
        for c in cfg.source_count..m {
            let mut dot = Complex64::new(0.0, 0.0);
            for s in 0..m {
                dot += vecs[(s, c)].conj() * d[s];
            }
            denom += dot.norm_sqr();
        }
        values.push(1.0 / denom.max(1e-300));
    }
    Ok(MusicSpectrum { bin, grid, values })
}

/// Largest local maximum at least `separation` away from the desired
/// azimuth; None when no admissible peak exists.
pub fn select_interferer(
    spectrum: &MusicSpectrum,
    theta_d: f64,
    cfg: &MusicConfig,
) -> Option<BinPeak> {
    let n = spectrum.values.len();
    let mut best: Option<BinPeak> = None;
    for i in 0..n {
        let prev = spectrum.values[(i + n - 1) % n];
        let next = spectrum.values[(i + 1) % n];
        let v = spectrum.values[i];
        if v < prev || v < next {
            continue;
        }
        let theta = spectrum.grid[i];
        if wrap_angle(theta - theta_d).abs() < cfg.separation {
            continue;
        }
        if best.as_ref().is_none_or(|b| v > b.value) {
            best = Some(BinPeak { theta, value: v });
        }
    }
    best
}

/// Circular mean of the per-bin azimuths: unweighted (MSC) or weighted by
/// the pseudospectrum peak value (wMSC).
pub fn phasor_average(peaks: &[Option<BinPeak>], method: AverageMethod) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut any = false;
    for p in peaks.iter().flatten() {
        let w = match method {
            AverageMethod::Msc => 1.0,
            AverageMethod::WMsc => p.value,
        };
        if w != 0.0 {
            any = true;
        }
        acc += Complex64::from_polar(w, p.theta);
    }
    if !any || acc.norm() == 0.0 {
        return Err(CoreError::NoValidBins);
    }
    Ok(acc.arg())
}

/// Full broadband MUSIC estimate over all retained bins.
pub fn estimate_music_doa(
    r_y: &[CMat],
    array: &SensorArray,
    geom: &RelativeGeometry,
    theta_d: Doa,
    cfg: &MusicConfig,
    method: AverageMethod,
) -> Result<BroadbandDoaEstimate> {
    let mut per_bin = Vec::with_capacity(r_y.len());
    for (k, r) in r_y.iter().enumerate() {
        if array.bin_freq(k) < cfg.min_freq_hz {
            per_bin.push(None);
            continue;
        }
        let spectrum = music_spectrum(r, array, geom, k, cfg)?;
        per_bin.push(select_interferer(&spectrum, theta_d.azimuth, cfg));
    }
    let theta = phasor_average(&per_bin, method)?;
    Ok(BroadbandDoaEstimate {
        method,
        theta,
        per_bin,
    })
}
