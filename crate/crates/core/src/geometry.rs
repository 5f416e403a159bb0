//! Sensor-array geometry, steering vectors and the known pseudo-normalized
//! covariance models (rank-1 directional, sinc isotropic, identity).
//!
//! All angles are radians internally; degrees appear only at CLI
//! boundaries. Spherical measurements are taken relative to the
//! reference sensor. For an ordered pair `[i, j]` the stored direction
//! is that of `p_j - p_i`, which makes the closed pair form of the
//! directional covariance match the steering-vector outer product on
//! planar arrays.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{CMat, CVec};

pub const SPEED_OF_SOUND: f64 = 343.0;

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Direction of arrival: azimuth in (-pi, pi], elevation in [-pi/2, pi/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Doa {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Doa {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self {
            azimuth: wrap_angle(azimuth),
            elevation: elevation.clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        }
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Self {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    /// Unit vector pointing toward the source.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (ct, st) = (self.azimuth.cos(), self.azimuth.sin());
        let (cp, sp) = (self.elevation.cos(), self.elevation.sin());
        [cp * ct, cp * st, sp]
    }
}

/// Sensor array description: Cartesian positions plus the spectral grid
/// the steering model is evaluated on. `bins` is the FFT order K; the
/// one-sided spectrum retains K/2 + 1 bins and bin k sits at k*f0/K Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ArrayJson", into = "ArrayJson")]
pub struct SensorArray {
    positions: Vec<[f64; 3]>,
    reference: usize,
    pub f0: f64,
    pub bins: usize,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayJson {
    sensors: Vec<[f64; 3]>,
    #[serde(default)]
    reference: usize,
    f0: f64,
    bins: usize,
    #[serde(default = "default_c")]
    c: f64,
}

fn default_c() -> f64 {
    SPEED_OF_SOUND
}

impl TryFrom<ArrayJson> for SensorArray {
    type Error = CoreError;
    fn try_from(j: ArrayJson) -> Result<Self> {
        SensorArray::new(j.sensors, j.reference, j.f0, j.bins, j.c)
    }
}

impl From<SensorArray> for ArrayJson {
    fn from(a: SensorArray) -> Self {
        ArrayJson {
            sensors: a.positions,
            reference: a.reference,
            f0: a.f0,
            bins: a.bins,
            c: a.c,
        }
    }
}

impl SensorArray {
    pub fn new(
        positions: Vec<[f64; 3]>,
        reference: usize,
        f0: f64,
        bins: usize,
        c: f64,
    ) -> Result<Self> {
        if positions.len() < 2 {
            return Err(CoreError::InvalidGeometry(format!(
                "need at least 2 sensors, got {}",
                positions.len()
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidGeometry(
                "non-finite sensor position".into(),
            ));
        }
        if reference >= positions.len() {
            return Err(CoreError::InvalidGeometry(format!(
                "reference index {} out of range for {} sensors",
                reference,
                positions.len()
            )));
        }
        if !(f0 > 0.0) {
            return Err(CoreError::InvalidGeometry(format!("f0 = {f0} must be > 0")));
        }
        if bins < 2 {
            return Err(CoreError::InvalidGeometry(format!(
                "bins = {bins} must be >= 2"
            )));
        }
        if !(c > 0.0) {
            return Err(CoreError::InvalidGeometry(format!(
                "wave speed = {c} must be > 0"
            )));
        }
        Ok(Self {
            positions,
            reference,
            f0,
            bins,
            c,
        })
    }

    /// Uniform rectangular array in the x-y plane, spacing in meters,
    /// reference at the first (corner) sensor.
    pub fn ura(rows: usize, cols: usize, spacing: f64, f0: f64, bins: usize) -> Result<Self> {
        let mut positions = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for col in 0..cols {
                positions.push([col as f64 * spacing, r as f64 * spacing, 0.0]);
            }
        }
        Self::new(positions, 0, f0, bins, SPEED_OF_SOUND)
    }

    /// Uniform linear array along the x axis.
    pub fn ula(count: usize, spacing: f64, f0: f64, bins: usize) -> Result<Self> {
        let positions = (0..count)
            .map(|i| [i as f64 * spacing, 0.0, 0.0])
            .collect();
        Self::new(positions, 0, f0, bins, SPEED_OF_SOUND)
    }

    pub fn num_sensors(&self) -> usize {
        self.positions.len()
    }

    pub fn reference_index(&self) -> usize {
        self.reference
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// Number of retained one-sided bins (k = 0..=K/2).
    pub fn num_bins(&self) -> usize {
        self.bins / 2 + 1
    }

    /// Frequency of bin k in Hz.
    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.f0 / self.bins as f64
    }

    /// True when all sensors lie in the z = 0 plane.
    pub fn is_horizontal_planar(&self) -> bool {
        self.positions.iter().all(|p| p[2].abs() < 1e-12)
    }

    /// Collinearity axis if the array is linear: unit vector, sign fixed
    /// so the first nonzero component is positive.
    pub fn linear_axis(&self) -> Option<[f64; 3]> {
        let p0 = self.positions[0];
        let mut axis = None;
        for p in &self.positions[1..] {
            let d = [p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]];
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if n < 1e-12 {
                continue;
            }
            let u = [d[0] / n, d[1] / n, d[2] / n];
            match axis {
                None => axis = Some(u),
                Some(a) => {
                    let cross = [
                        a[1] * u[2] - a[2] * u[1],
                        a[2] * u[0] - a[0] * u[2],
                        a[0] * u[1] - a[1] * u[0],
                    ];
                    let c2 = cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2];
                    if c2 > 1e-18 {
                        return None;
                    }
                }
            }
        }
        axis.map(|mut a| {
            let lead = if a[0].abs() > 1e-12 {
                a[0]
            } else if a[1].abs() > 1e-12 {
                a[1]
            } else {
                a[2]
            };
            if lead < 0.0 {
                a = [-a[0], -a[1], -a[2]];
            }
            a
        })
    }
}

/// Relative spherical coordinates (distance, azimuth, elevation) for every
/// ordered sensor pair, in the reference-sensor frame.
#[derive(Debug, Clone)]
pub struct RelativeGeometry {
    m: usize,
    r: Vec<f64>,
    psi: Vec<f64>,
    lambda: Vec<f64>,
    reference: usize,
}

impl RelativeGeometry {
    /// (r, psi, lambda) of the ordered pair [i, j], direction `p_j - p_i`.
    pub fn pair(&self, i: usize, j: usize) -> (f64, f64, f64) {
        let idx = i * self.m + j;
        (self.r[idx], self.psi[idx], self.lambda[idx])
    }

    /// Geometry of sensor m relative to the reference sensor.
    pub fn sensor(&self, m: usize) -> (f64, f64, f64) {
        self.pair(self.reference, m)
    }

    pub fn num_sensors(&self) -> usize {
        self.m
    }
}

/// Compute pairwise relative spherical coordinates.
///
/// Fails when two distinct sensors coincide, which would make the pair
/// direction undefined.
pub fn relative_geometry(array: &SensorArray) -> Result<RelativeGeometry> {
    let m = array.num_sensors();
    let pos = array.positions();
    let mut r = vec![0.0; m * m];
    let mut psi = vec![0.0; m * m];
    let mut lambda = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let d = [
                pos[j][0] - pos[i][0],
                pos[j][1] - pos[i][1],
                pos[j][2] - pos[i][2],
            ];
            let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if i != j && dist < 1e-12 {
                return Err(CoreError::CoincidentSensors(i, j));
            }
            let idx = i * m + j;
            r[idx] = dist;
            if dist > 0.0 {
                psi[idx] = d[1].atan2(d[0]);
                lambda[idx] = (d[2] / dist).asin();
            }
        }
    }
    Ok(RelativeGeometry {
        m,
        r,
        psi,
        lambda,
        reference: array.reference_index(),
    })
}

/// Per-bin complex steering vector (relative frequency responses from the
/// reference sensor to every sensor).
#[derive(Debug, Clone)]
pub struct SteeringVector {
    pub doa: Doa,
    /// One entry per retained bin, each a length-M complex vector.
    pub bins: Vec<CVec>,
}

impl SteeringVector {
    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }
}

/// Steering-model phase argument for one sensor: r cos(theta - psi) cos(phi - lambda).
fn steering_projection(r: f64, psi: f64, lambda: f64, doa: Doa) -> f64 {
    r * (doa.azimuth - psi).cos() * (doa.elevation - lambda).cos()
}

/// Steering vector for a DoA over all retained bins.
///
/// Entry m at bin k is `exp(-i 2 pi (k f0)/(K c) g_m)` with
/// `g_m = r_m cos(theta - psi_m) cos(phi - lambda_m)`, coordinates taken
/// relative to the reference sensor. The reference entry is exactly 1.
pub fn steering_vector(array: &SensorArray, geom: &RelativeGeometry, doa: Doa) -> SteeringVector {
    let m = array.num_sensors();
    let nbins = array.num_bins();
    let alpha = 2.0 * std::f64::consts::PI * array.f0 / (array.bins as f64 * array.c);
    let proj: Vec<f64> = (0..m)
        .map(|s| {
            let (r, psi, lambda) = geom.sensor(s);
            steering_projection(r, psi, lambda, doa)
        })
        .collect();
    let mut bins = Vec::with_capacity(nbins);
    for k in 0..nbins {
        let mut v = CVec::zeros(m);
        for (s, &g) in proj.iter().enumerate() {
            let phase = -alpha * k as f64 * g;
            v[s] = Complex64::from_polar(1.0, phase);
        }
        // The reference projection is 0 by construction; pin it exactly.
        v[array.reference_index()] = Complex64::new(1.0, 0.0);
        bins.push(v);
    }
    SteeringVector { doa, bins }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PseudoCovKind {
    Desired,
    Interferer,
    Isotropic,
    White,
}

/// Per-bin Hermitian pseudo-normalized covariance (unit diagonal).
#[derive(Debug, Clone)]
pub struct PseudoCovariance {
    pub kind: PseudoCovKind,
    pub bins: Vec<CMat>,
}

impl PseudoCovariance {
    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }
}

/// Rank-1 pseudo-covariance `sv sv^H` per bin.
pub fn directional_pseudocov(sv: &SteeringVector, kind: PseudoCovKind) -> PseudoCovariance {
    let bins = sv.bins.iter().map(crate::linalg::outer).collect();
    PseudoCovariance { kind, bins }
}

/// Spherically isotropic (diffuse) pseudo-covariance: entry (i, j) is
/// sinc(2 pi f_k r_ij / c) with sinc(x) = sin(x)/x.
pub fn isotropic_pseudocov(array: &SensorArray, geom: &RelativeGeometry) -> PseudoCovariance {
    let m = array.num_sensors();
    let nbins = array.num_bins();
    let mut bins = Vec::with_capacity(nbins);
    for k in 0..nbins {
        let fk = array.bin_freq(k);
        let mut mat = CMat::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                let (r, _, _) = geom.pair(i, j);
                let x = 2.0 * std::f64::consts::PI * fk * r / array.c;
                let v = if x.abs() < 1e-12 { 1.0 } else { x.sin() / x };
                mat[(i, j)] = Complex64::new(v, 0.0);
            }
        }
        bins.push(mat);
    }
    PseudoCovariance {
        kind: PseudoCovKind::Isotropic,
        bins,
    }
}

/// Identity pseudo-covariance (uncorrelated sensor noise).
pub fn white_pseudocov(m: usize, nbins: usize) -> PseudoCovariance {
    PseudoCovariance {
        kind: PseudoCovKind::White,
        bins: (0..nbins).map(|_| crate::linalg::identity(m)).collect(),
    }
}

/// Closed pair form of the directional pseudo-covariance entry, used by
/// tests and by the DoA gradient terms.
pub fn directional_pair_entry(
    array: &SensorArray,
    geom: &RelativeGeometry,
    doa: Doa,
    i: usize,
    j: usize,
    k: usize,
) -> Complex64 {
    let (r, psi, lambda) = geom.pair(i, j);
    let alpha = 2.0 * std::f64::consts::PI * array.f0 / (array.bins as f64 * array.c);
    // Pair [i, j] points from i to j, so the exponent enters with +alpha:
    // b_i conj(b_j) = exp(-i alpha k (g_i - g_j)) and g_i - g_j = -g_ij.
    Complex64::from_polar(
        1.0,
        alpha * k as f64 * steering_projection(r, psi, lambda, doa),
    )
}

/// Dense M x M matrix from a per-bin closure (test helper shared by modules).
pub fn matrix_from_fn(m: usize, f: impl Fn(usize, usize) -> Complex64) -> CMat {
    let mut a = CMat::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = f(i, j);
        }
    }
    a
}

/// Real symmetric positive semidefinite check helper for tests.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    let (vals, _) = crate::linalg::hermitian_eigen(a);
    *vals.last().unwrap()
}

pub fn array1_from(v: &[Complex64]) -> Array1<Complex64> {
    Array1::from_vec(v.to_vec())
}

pub fn array2_zeros(n: usize) -> Array2<Complex64> {
    Array2::zeros((n, n))
}
