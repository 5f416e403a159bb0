//! LCMV, MVDR and LCMP beamformer weights.
//!
//! All three share the linearly-constrained minimum-variance template
//! `h = R^-1 C (C^H R^-1 C)^-1 i`: LCMV against the estimated noise
//! covariance with C = [d, b] and i = (1, 0); MVDR is the single-constraint
//! case C = [d]; LCMP swaps the noise covariance for the observed one.
//! Solves go through a Hermitian positive-definite Cholesky factorization
//! rather than explicit inverses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covariance::NoiseCovariance;
use crate::error::{CoreError, Result};
use crate::geometry::SteeringVector;
use crate::linalg::{cholesky, cholesky_solve, hdot, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeamformerMethod {
    Lcmv,
    Mvdr,
    Lcmp,
}

/// Which MVDR equation to use. The standard form minimizes output noise
/// power; the printed form (no inverse on the noise covariance) exists
/// only to reproduce the formula as typeset in some writeups and does not
/// minimize anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MvdrForm {
    #[default]
    Standard,
    Printed,
}

/// Distortionless + null constraint pair per bin: C = [d | b], i = (1, 0).
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub desired: SteeringVector,
    pub interferer: SteeringVector,
}

impl ConstraintSet {
    pub fn new(desired: SteeringVector, interferer: SteeringVector) -> Result<Self> {
        if desired.num_bins() != interferer.num_bins() {
            return Err(CoreError::DimensionMismatch(format!(
                "constraint steering vectors disagree on bins: {} vs {}",
                desired.num_bins(),
                interferer.num_bins()
            )));
        }
        Ok(Self {
            desired,
            interferer,
        })
    }

    /// Smallest singular value of C at bin k. For unit-modulus columns this
    /// is sqrt(M - |d^H b|).
    pub fn min_singular_value(&self, k: usize) -> f64 {
        let d = &self.desired.bins[k];
        let b = &self.interferer.bins[k];
        let m = d.len() as f64;
        (m - hdot(d, b).norm()).max(0.0).sqrt()
    }

    fn check_rank(&self, k: usize) -> Result<()> {
        let m = self.desired.bins[k].len() as f64;
        if self.min_singular_value(k) <= 1e-6 * m.sqrt() {
            return Err(CoreError::ConstraintCollision { bin: k });
        }
        Ok(())
    }
}

/// Per-bin complex weight vectors.
#[derive(Debug, Clone)]
pub struct BeamformerWeights {
    pub method: BeamformerMethod,
    pub bins: Vec<CVec>,
    /// Set when diagonal loading had to be added to make the covariance
    /// factorizable (LCMP on rank-deficient sample covariances).
    pub loaded: bool,
    /// Bins where the null constraint collided with the distortionless one
    /// and was dropped. At DC every steering vector is all-ones, so bin 0
    /// lands here for any DoA pair; a null there is not definable.
    pub null_dropped: Vec<usize>,
}

impl BeamformerWeights {
    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    /// True when the null constraint survives at bin k.
    pub fn has_null(&self, k: usize) -> bool {
        !self.null_dropped.contains(&k)
    }
}

/// Two-constraint weight solve for one bin.
fn constrained_weights(l: &CMat, d: &CVec, b: &CVec, k: usize) -> Result<CVec> {
    let x_d = cholesky_solve(l, d);
    let x_b = cholesky_solve(l, b);
    // 2x2 Gram G = C^H R^-1 C.
    let g11 = hdot(d, &x_d);
    let g12 = hdot(d, &x_b);
    let g21 = hdot(b, &x_d);
    let g22 = hdot(b, &x_b);
    let det = g11 * g22 - g12 * g21;
    if det.norm() < 1e-300 {
        return Err(CoreError::ConstraintCollision { bin: k });
    }
    // (G^-1 i) with i = (1, 0) is the first column of G^-1.
    let a0 = g22 / det;
    let a1 = -g21 / det;
    Ok(CVec::from_iter(
        x_d.iter().zip(x_b.iter()).map(|(u, v)| u * a0 + v * a1),
    ))
}

/// Single-constraint (distortionless-only) fallback for collided bins.
fn distortionless_weights(l: &CMat, d: &CVec) -> CVec {
    let x = cholesky_solve(l, d);
    let denom = hdot(d, &x);
    x.mapv(|z| z / denom)
}

/// Raise the collision error when the null constraint failed on so many
/// bins that the two DoAs must genuinely coincide; DC alone is expected.
fn check_collision_extent(dropped: &[usize], total: usize) -> Result<()> {
    if dropped.len() * 2 > total {
        return Err(CoreError::ConstraintCollision {
            bin: dropped.iter().copied().find(|&k| k > 0).unwrap_or(0),
        });
    }
    Ok(())
}

/// LCMV weights against the estimated noise covariance: distortionless
/// toward `d`, null toward `b`.
pub fn lcmv(ncm: &NoiseCovariance, cs: &ConstraintSet) -> Result<BeamformerWeights> {
    if ncm.bins.len() != cs.desired.num_bins() {
        return Err(CoreError::DimensionMismatch(format!(
            "lcmv: {} covariance bins vs {} constraint bins",
            ncm.bins.len(),
            cs.desired.num_bins()
        )));
    }
    let mut bins = Vec::with_capacity(ncm.bins.len());
    let mut null_dropped = Vec::new();
    for (k, r) in ncm.bins.iter().enumerate() {
        let l = cholesky(r)?;
        if cs.check_rank(k).is_err() {
            null_dropped.push(k);
            bins.push(distortionless_weights(&l, &cs.desired.bins[k]));
            continue;
        }
        bins.push(constrained_weights(
            &l,
            &cs.desired.bins[k],
            &cs.interferer.bins[k],
            k,
        )?);
    }
    check_collision_extent(&null_dropped, ncm.bins.len())?;
    Ok(BeamformerWeights {
        method: BeamformerMethod::Lcmv,
        bins,
        loaded: false,
        null_dropped,
    })
}

/// MVDR weights: distortionless toward `d`, minimum output noise power.
pub fn mvdr(
    ncm: &NoiseCovariance,
    d: &SteeringVector,
    form: MvdrForm,
) -> Result<BeamformerWeights> {
    if ncm.bins.len() != d.num_bins() {
        return Err(CoreError::DimensionMismatch(format!(
            "mvdr: {} covariance bins vs {} steering bins",
            ncm.bins.len(),
            d.num_bins()
        )));
    }
    let mut bins = Vec::with_capacity(ncm.bins.len());
    for (k, r) in ncm.bins.iter().enumerate() {
        let dk = &d.bins[k];
        let num = match form {
            MvdrForm::Standard => {
                let l = cholesky(r)?;
                cholesky_solve(&l, dk)
            }
            MvdrForm::Printed => {
                // R d instead of R^-1 d, exactly as typeset.
                let m = dk.len();
                CVec::from_iter(
                    (0..m).map(|i| (0..m).map(|j| r[(i, j)] * dk[j]).sum::<Complex64>()),
                )
            }
        };
        let denom = hdot(dk, &num);
        if denom.norm() < 1e-300 {
            return Err(CoreError::NotPositiveDefinite(format!(
                "mvdr: vanishing quadratic form at bin {k}"
            )));
        }
        bins.push(num.mapv(|z| z / denom));
    }
    Ok(BeamformerWeights {
        method: BeamformerMethod::Mvdr,
        bins,
        loaded: false,
        null_dropped: Vec::new(),
    })
}

/// LCMP weights: the LCMV template against the observed covariance. Adds
/// `epsilon` diagonal loading (flagged) when the sample covariance is not
/// factorizable.
pub fn lcmp(r_y: &[CMat], cs: &ConstraintSet, epsilon: f64) -> Result<BeamformerWeights> {
    if r_y.len() != cs.desired.num_bins() {
        return Err(CoreError::DimensionMismatch(format!(
            "lcmp: {} covariance bins vs {} constraint bins",
            r_y.len(),
            cs.desired.num_bins()
        )));
    }
    let mut bins = Vec::with_capacity(r_y.len());
    let mut loaded = false;
    let mut null_dropped = Vec::new();
    for (k, r) in r_y.iter().enumerate() {
        let l = match cholesky(r) {
            Ok(l) => l,
            Err(_) => {
                loaded = true;
                let mut reg = r.clone();
                for i in 0..reg.nrows() {
                    reg[(i, i)] += epsilon;
                }
                cholesky(&reg)?
            }
        };
        if cs.check_rank(k).is_err() {
            null_dropped.push(k);
            bins.push(distortionless_weights(&l, &cs.desired.bins[k]));
            continue;
        }
        bins.push(constrained_weights(
            &l,
            &cs.desired.bins[k],
            &cs.interferer.bins[k],
            k,
        )?);
    }
    check_collision_extent(&null_dropped, r_y.len())?;
    Ok(BeamformerWeights {
        method: BeamformerMethod::Lcmp,
        bins,
        loaded,
        null_dropped,
    })
}
