//! Broadband cost, analytic DoA gradients and the alternating joint
//! estimation of interferer direction and per-bin variances.
//!
//! Gradient sign/scale convention, verified against central finite
//! differences of the broadband cost and frozen here: with pair [i, j]
//! oriented from sensor i to sensor j (i < j) the full-form derivatives
//! of the broadband cost are
//!
//! `dJ/dtheta = S * 2 cos(phi) * sum_{i<j} sin(theta - psi_ij) cos(lambda_ij) G_ij`
//! `dJ/dphi   = S * 2 sin(phi) * sum_{i<j} cos(theta - psi_ij) cos(lambda_ij) G_ij`
//!
//! with the positive prefactor `S = 4 pi f0 / (K c)` and
//! `G_ij = r_ij sum_k k s2p[k] Im{ conj(E_ij[k]) Rp_ij[k] }`, where `E` is
//! the model-minus-observed residual. Both expressions are exact for
//! horizontal-planar arrays (every pair elevation zero), where the pair
//! closed form of `Rp` coincides with the steering outer product.
//! Negative gradient is a descent direction; dropping `S` (a positive
//! constant) changes neither zeros nor descent directions.

use serde::{Deserialize, Serialize};

use crate::covariance::{assemble_ncm, BinCovarianceSet, NoiseCovariance, Variances};
use crate::error::{CoreError, Result};
use crate::geometry::{
    directional_pair_entry, directional_pseudocov, steering_vector, wrap_angle, Doa,
    PseudoCovKind, RelativeGeometry, SensorArray,
};
use crate::solver::{build_system, solve_nonnegative, ActiveSetState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientForm {
    /// Exact derivative of the broadband cost (planar arrays).
    Full,
    /// Full form with the leading cos(phi)/sin(phi) factors dropped.
    General,
    /// General form with the pair-elevation cosine dropped as well.
    Planar,
    /// Collinear arrays on the x axis: plain sum of oriented G terms,
    /// elevation pinned to zero.
    Linear,
}

/// Settings for the gradient descent and the alternating outer loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentConfig {
    /// Azimuth/elevation starting point (radians).
    pub initial: Doa,
    /// Initial step length in radians.
    pub step: f64,
    /// Inner descent iteration cap.
    pub max_iters: usize,
    /// Gradient tolerance, scaled by the broadband observed energy.
    pub tol_grad: f64,
    /// Backtracking contraction factor.
    pub backtrack: f64,
    /// Additional azimuth offsets (radians) for multi-start; empty means a
    /// single start at `initial`.
    pub multi_start_offsets: Vec<f64>,
    pub form: GradientForm,
    /// Descend azimuth only, keeping the initial elevation.
    pub azimuth_only: bool,
    /// Keep-out radius around the desired DoA (radians).
    pub exclusion: f64,
    /// Outer alternation cap.
    pub max_outer: usize,
}

impl DescentConfig {
    pub fn new(initial: Doa) -> Self {
        Self {
            initial,
            step: 0.05,
            max_iters: 300,
            tol_grad: 1e-6,
            backtrack: 0.5,
            multi_start_offsets: Vec::new(),
            form: GradientForm::Planar,
            azimuth_only: true,
            exclusion: 5f64.to_radians(),
            max_outer: 60,
        }
    }

    /// Eight equally spaced azimuth starts, for use when no prior estimate
    /// exists.
    pub fn with_eight_starts(mut self) -> Self {
        self.multi_start_offsets = (0..8)
            .map(|i| i as f64 * std::f64::consts::TAU / 8.0)
            .collect();
        self
    }
}

/// Fixed inputs of one estimation run. The interferer component of
/// `comps` is ignored; every cost/gradient evaluation rebuilds it from
/// the DoA under test so the two can never fall out of sync.
pub struct EstimationContext<'a> {
    pub array: &'a SensorArray,
    pub geom: &'a RelativeGeometry,
    pub comps: &'a BinCovarianceSet,
    pub theta_d: Doa,
    /// Bins participating in the fit. The DC bin is excluded by default:
    /// at k = 0 the desired, interferer and isotropic structures are all
    /// the all-ones matrix and the normal system is singular.
    pub bin_range: std::ops::Range<usize>,
}

impl<'a> EstimationContext<'a> {
    pub fn new(
        array: &'a SensorArray,
        geom: &'a RelativeGeometry,
        comps: &'a BinCovarianceSet,
        theta_d: Doa,
    ) -> Self {
        let bins = comps.num_bins();
        Self {
            array,
            geom,
            comps,
            theta_d,
            bin_range: 1..bins,
        }
    }

    /// Broadband observed energy, used to scale gradient tolerances.
    pub fn cost_scale(&self) -> f64 {
        self.bin_range
            .clone()
            .map(|k| crate::linalg::frob_norm_sq(&self.comps.r_y[k]))
            .sum::<f64>()
            .max(f64::MIN_POSITIVE)
    }

    /// Positive gradient prefactor `4 pi f0 / (K c)`.
    pub fn gradient_scale(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.array.f0 / (self.array.bins as f64 * self.array.c)
    }
}

/// Broadband fit cost `sum_k ||R_model(sigma_k, doa)[k] - R_y[k]||_F^2`
/// over the context's bin range.
pub fn broadband_cost(ctx: &EstimationContext, v: &Variances, doa: Doa) -> f64 {
    let m = ctx.comps.num_sensors();
    let eps = ctx.comps.epsilon;
    let mut total = 0.0;
    for k in ctx.bin_range.clone() {
        let sigma = &v.per_bin[k];
        let rx = &ctx.comps.desired.bins[k];
        let rg = &ctx.comps.isotropic.bins[k];
        let ry = &ctx.comps.r_y[k];
        for i in 0..m {
            for j in 0..m {
                let rp = directional_pair_entry(ctx.array, ctx.geom, doa, i, j, k);
                let mut e = rx[(i, j)] * sigma[0] + rp * sigma[1] + rg[(i, j)] * sigma[2];
                if i == j {
                    e += sigma[3] + eps;
                }
                e -= ry[(i, j)];
                total += e.norm_sqr();
            }
        }
    }
    total
}

/// Per-pair gradient ingredients at one DoA.
#[derive(Debug, Clone)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    /// sin(theta - psi_ij) cos(phi - lambda_ij)
    pub f1: f64,
    /// cos(theta - psi_ij) sin(phi - lambda_ij)
    pub f2: f64,
    /// r_ij sum_k k s2p[k] Im{ conj(E_ij) Rp_ij }
    pub g: f64,
}

/// G term for one ordered pair (the gradient uses i < j; the swapped
/// order negates it).
pub fn pair_g(ctx: &EstimationContext, v: &Variances, doa: Doa, i: usize, j: usize) -> f64 {
    let eps = ctx.comps.epsilon;
    let (r_ij, _, _) = ctx.geom.pair(i, j);
    let mut acc = 0.0;
    for k in ctx.bin_range.clone() {
        let sigma = &v.per_bin[k];
        if sigma[1] == 0.0 {
            continue;
        }
        let rp = directional_pair_entry(ctx.array, ctx.geom, doa, i, j, k);
        let mut e = ctx.comps.desired.bins[k][(i, j)] * sigma[0]
            + rp * sigma[1]
            + ctx.comps.isotropic.bins[k][(i, j)] * sigma[2];
        if i == j {
            e += sigma[3] + eps;
        }
        e -= ctx.comps.r_y[k][(i, j)];
        acc += k as f64 * sigma[1] * (e.conj() * rp).im;
    }
    r_ij * acc
}

/// All upper-triangle pair terms at one DoA.
pub fn gradient_terms(ctx: &EstimationContext, v: &Variances, doa: Doa) -> Vec<PairTerm> {
    let m = ctx.comps.num_sensors();
    let mut terms = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let (_, psi, lambda) = ctx.geom.pair(i, j);
            let f1 = (doa.azimuth - psi).sin() * (doa.elevation - lambda).cos();
            let f2 = (doa.azimuth - psi).cos() * (doa.elevation - lambda).sin();
            let g = pair_g(ctx, v, doa, i, j);
            terms.push(PairTerm { i, j, f1, f2, g });
        }
    }
    terms
}

/// Analytic gradient of the broadband cost with respect to (theta, phi).
pub fn doa_gradient(
    ctx: &EstimationContext,
    v: &Variances,
    doa: Doa,
    form: GradientForm,
) -> Result<(f64, f64)> {
    let s = ctx.gradient_scale();
    if form == GradientForm::Linear {
        let axis = ctx.array.linear_axis().ok_or_else(|| {
            CoreError::InvalidConfig("linear gradient form requires a collinear array".into())
        })?;
        if axis[0].abs() < 1.0 - 1e-9 {
            return Err(CoreError::InvalidConfig(
                "linear gradient form expects the array along the x axis; rotate coordinates"
                    .into(),
            ));
        }
        let flat = Doa::new(doa.azimuth, 0.0);
        let m = ctx.comps.num_sensors();
        let pos = ctx.array.positions();
        let mut acc = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                let orient = (pos[j][0] - pos[i][0]).signum();
                acc += orient * pair_g(ctx, v, flat, i, j);
            }
        }
        return Ok((s * acc, 0.0));
    }

    let terms = gradient_terms(ctx, v, doa);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for t in &terms {
        let (_, psi, lambda) = ctx.geom.pair(t.i, t.j);
        let lam_cos = match form {
            GradientForm::Planar => 1.0,
            _ => lambda.cos(),
        };
        s1 += (doa.azimuth - psi).sin() * lam_cos * t.g;
        s2 += (doa.azimuth - psi).cos() * lam_cos * t.g;
    }
    match form {
        GradientForm::Full => Ok((
            s * 2.0 * doa.elevation.cos() * s1,
            s * 2.0 * doa.elevation.sin() * s2,
        )),
        _ => Ok((s * s1, s * s2)),
    }
}

/// Equivalent-cone azimuth for collinear arrays: arccos(cos theta cos phi).
pub fn reduce_to_azimuth(theta: f64, phi: f64) -> f64 {
    (theta.cos() * phi.cos()).acos()
}

fn angular_distance(a: Doa, b: Doa) -> f64 {
    let ua = a.unit_vector();
    let ub = b.unit_vector();
    let dot: f64 = ua.iter().zip(ub.iter()).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos()
}

/// Push an azimuth out of the keep-out zone around the desired direction.
fn project_out_of_exclusion(doa: Doa, theta_d: Doa, exclusion: f64) -> Doa {
    if exclusion <= 0.0 || angular_distance(doa, theta_d) >= exclusion {
        return doa;
    }
    let delta = wrap_angle(doa.azimuth - theta_d.azimuth);
    let side = if delta >= 0.0 { 1.0 } else { -1.0 };
    Doa::new(theta_d.azimuth + side * exclusion, doa.elevation)
}

#[derive(Debug, Clone)]
pub struct DescentInfo {
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub cost: f64,
}

/// Gradient descent on the broadband cost at fixed variances, with a
/// backtracking (Armijo) line search. The returned cost never exceeds the
/// starting cost.
pub fn descend_doa(
    ctx: &EstimationContext,
    v: &Variances,
    start: Doa,
    cfg: &DescentConfig,
) -> Result<(Doa, DescentInfo)> {
    let tol = cfg.tol_grad * ctx.cost_scale();
    let mut doa = project_out_of_exclusion(start, ctx.theta_d, cfg.exclusion);
    if cfg.form == GradientForm::Linear {
        doa = Doa::new(doa.azimuth.abs(), 0.0);
    }
    let mut cost = broadband_cost(ctx, v, doa);
    let mut info = DescentInfo {
        iterations: 0,
        grad_norm: f64::INFINITY,
        converged: false,
        cost,
    };
    // Step length in gradient units, warm-started between iterations.
    let mut t: Option<f64> = None;
    const ARMIJO: f64 = 1e-4;

    for it in 0..cfg.max_iters {
        info.iterations = it + 1;
        let (gt, gp_raw) = doa_gradient(ctx, v, doa, cfg.form)?;
        let gp = if cfg.azimuth_only { 0.0 } else { gp_raw };
        let gnorm = (gt * gt + gp * gp).sqrt();
        info.grad_norm = gnorm;
        if gnorm <= tol {
            info.converged = true;
            break;
        }
        // First iteration: scale so the move spans cfg.step radians.
        let mut step = t.unwrap_or(cfg.step / gnorm);
        let mut accepted = false;
        while step * gnorm > 1e-14 {
            let theta = doa.azimuth - step * gt;
            let phi = if cfg.azimuth_only {
                doa.elevation
            } else {
                (doa.elevation - step * gp).clamp(-1.55, 1.55)
            };
            let mut cand = Doa::new(theta, phi);
            if cfg.form == GradientForm::Linear {
                cand = Doa::new(cand.azimuth.abs(), 0.0);
            }
            cand = project_out_of_exclusion(cand, ctx.theta_d, cfg.exclusion);
            let cand_cost = broadband_cost(ctx, v, cand);
            if cand_cost <= cost - ARMIJO * step * gnorm * gnorm {
                doa = cand;
                cost = cand_cost;
                accepted = true;
                break;
            }
            step *= cfg.backtrack;
        }
        if !accepted {
            // No admissible decrease along the (possibly approximate)
            // gradient direction: stop at the best point seen.
            break;
        }
        t = Some(step * 2.0);
    }
    info.cost = cost;
    Ok((doa, info))
}

/// Per-iteration record of the alternating scheme, streamable as JSON lines.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub outer: usize,
    pub cost: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub grad_norm: f64,
    /// Bins with each component clamped to zero, (x, p, gamma, v) order.
    pub active_bins: [usize; 4],
}

#[derive(Debug, Clone)]
pub struct JointEstimate {
    pub variances: Variances,
    pub doa: Doa,
    pub ncm: NoiseCovariance,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub cost: f64,
    /// Set when the fitted interferer power is negligible, making the
    /// direction estimate meaningless.
    pub low_confidence: bool,
    pub trace: Vec<TraceStep>,
}

/// Solve the nonnegative variances for every bin in range at the given
/// interferer DoA. Bins outside the range keep zero variances.
pub fn solve_variances_at(ctx: &EstimationContext, doa: Doa) -> Result<(Variances, [usize; 4])> {
    let bins = ctx.comps.num_bins();
    let sv = steering_vector(ctx.array, ctx.geom, doa);
    let mut work = ctx.comps.clone();
    work.set_interferer(directional_pseudocov(&sv, PseudoCovKind::Interferer));
    let mut v = Variances::zeros(bins);
    let mut active = [0usize; 4];
    for k in ctx.bin_range.clone() {
        let state: ActiveSetState = solve_nonnegative(&build_system(&work, k))?;
        v.per_bin[k] = state.sigma;
        for c in 0..4 {
            if state.active[c] {
                active[c] += 1;
            }
        }
    }
    Ok((v, active))
}

/// Alternating minimization: nonnegative variance solve at the current
/// DoA, then gradient descent on the DoA at fixed variances, repeated
/// until the gradient falls under tolerance. With multiple starts the
/// lowest-cost run wins. The returned noise covariance uses the interferer
/// structure at the final DoA.
pub fn joint_estimate(ctx: &EstimationContext, cfg: &DescentConfig) -> Result<JointEstimate> {
    let starts: Vec<Doa> = if cfg.multi_start_offsets.is_empty() {
        vec![cfg.initial]
    } else {
        cfg.multi_start_offsets
            .iter()
            .map(|off| Doa::new(cfg.initial.azimuth + off, cfg.initial.elevation))
            .collect()
    };
    let mut best: Option<JointEstimate> = None;
    let mut last_err = None;
    for start in starts {
        match single_run(ctx, cfg, start) {
            Ok(est) => {
                if best.as_ref().is_none_or(|b| est.cost < b.cost) {
                    best = Some(est);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(est) => Ok(est),
        None => Err(last_err.unwrap_or(CoreError::EmptyInput("joint_estimate: no starts"))),
    }
}

fn single_run(ctx: &EstimationContext, cfg: &DescentConfig, start: Doa) -> Result<JointEstimate> {
    let tol = cfg.tol_grad * ctx.cost_scale();
    let mut doa = project_out_of_exclusion(start, ctx.theta_d, cfg.exclusion);
    if cfg.form == GradientForm::Linear {
        doa = Doa::new(doa.azimuth.abs(), 0.0);
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;
    let mut outer_done = 0;

    for outer in 0..cfg.max_outer {
        outer_done = outer + 1;
        let (v_iter, active) = solve_variances_at(ctx, doa)?;
        let (gt, gp_raw) = doa_gradient(ctx, &v_iter, doa, cfg.form)?;
        let gp = if cfg.azimuth_only { 0.0 } else { gp_raw };
        grad_norm = (gt * gt + gp * gp).sqrt();
        let cost = broadband_cost(ctx, &v_iter, doa);
        trace.push(TraceStep {
            outer,
            cost,
            theta_deg: doa.azimuth.to_degrees(),
            phi_deg: doa.elevation.to_degrees(),
            grad_norm,
            active_bins: active,
        });
        if grad_norm <= tol {
            converged = true;
            break;
        }
        let (next, info) = descend_doa(ctx, &v_iter, doa, cfg)?;
        let moved = angular_distance(next, doa);
        doa = next;
        grad_norm = info.grad_norm;
        if moved <= 1e-14 {
            // Descent is pinned (tolerance, stall or exclusion boundary);
            // another outer pass cannot change anything.
            converged = info.converged;
            break;
        }
    }

    let (v, _) = solve_variances_at(ctx, doa)?;
    let cost = broadband_cost(ctx, &v, doa);
    let sv = steering_vector(ctx.array, ctx.geom, doa);
    let mut work = ctx.comps.clone();
    work.set_interferer(directional_pseudocov(&sv, PseudoCovKind::Interferer));
    let ncm = assemble_ncm(&v, &work)?;

    let p_total: f64 = v.per_bin.iter().map(|s| s[1]).sum();
    let all_total: f64 = v.per_bin.iter().map(|s| s.iter().sum::<f64>()).sum();
    let low_confidence = p_total <= 1e-8 * all_total.max(f64::MIN_POSITIVE);

    Ok(JointEstimate {
        variances: v,
        doa,
        ncm,
        iterations: outer_done,
        grad_norm,
        converged,
        cost,
        low_confidence,
        trace,
    })
}
