//! Per-bin nonnegative variance solve.
//!
//! The Frobenius fit of the modeled covariance against the observed one is
//! quadratic in the four component variances, so each bin reduces to a 4x4
//! symmetric system `A sigma = q`. The unconstrained solution may go
//! negative; the constrained minimum is found by enumerating active
//! (clamped-to-zero) subsets of the negative entries in order of growing
//! cardinality, which needs at most 16 reduced solves per bin. Two facts
//! keep this exact: an infeasible unconstrained minimum forces the
//! constrained one onto the boundary, and the constrained active set can
//! only contain entries that were negative in the unconstrained solution.

use serde::Serialize;

use crate::covariance::{BinCovarianceSet, COMPONENT_NAMES, NUM_COMPONENTS};
use crate::error::{CoreError, Result};
use crate::linalg::{solve_real, sym_eigenvalues};

const N: usize = NUM_COMPONENTS;

/// Condition-number guard for the 4x4 systems.
const CONDITION_LIMIT: f64 = 1e12;

/// Beyond this the system is structurally rank-deficient (e.g. the
/// interferer steering equals the desired steering) and a diagonal bump
/// would only manufacture an arbitrary split between the collinear
/// components.
const CONDITION_HARD_LIMIT: f64 = 1e14;

/// One bin's normal-equation system. `offset` completes the quadratic so
/// that `cost(sigma)` equals the Frobenius residual of the fit.
#[derive(Debug, Clone, Serialize)]
pub struct NormalSystem {
    pub bin: usize,
    pub a: [[f64; N]; N],
    pub q: [f64; N],
    pub offset: f64,
}

impl NormalSystem {
    /// Quadratic fit cost: `0.5 s^T A s - q^T s + offset`.
    pub fn cost(&self, sigma: &[f64; N]) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        for w in 0..N {
            lin += self.q[w] * sigma[w];
            for z in 0..N {
                quad += sigma[w] * self.a[w][z] * sigma[z];
            }
        }
        0.5 * quad - lin + self.offset
    }

    /// Gradient of the fit cost: `A s - q`.
    pub fn gradient(&self, sigma: &[f64; N]) -> [f64; N] {
        let mut g = [0.0; N];
        for w in 0..N {
            let mut acc = -self.q[w];
            for z in 0..N {
                acc += self.a[w][z] * sigma[z];
            }
            g[w] = acc;
        }
        g
    }
}

/// Build the (A, q) system for one bin from the component matrices and the
/// epsilon-adjusted observed covariance. Entry `A[w][z]` is twice the real
/// Frobenius inner product of components w and z.
pub fn build_system(comps: &BinCovarianceSet, bin: usize) -> NormalSystem {
    let m = comps.num_sensors();
    let r_y_eps = comps.r_y_eps(bin);
    let mut a = [[0.0; N]; N];
    let mut q = [0.0; N];
    for w in 0..N {
        let cw = &comps.component(w).bins[bin];
        for z in w..N {
            let cz = &comps.component(z).bins[bin];
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let x = cw[(i, j)];
                    let y = cz[(i, j)];
                    acc += x.re * y.re + x.im * y.im;
                }
            }
            a[w][z] = 2.0 * acc;
            a[z][w] = 2.0 * acc;
        }
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = r_y_eps[(i, j)];
                let y = cw[(i, j)];
                acc += x.re * y.re + x.im * y.im;
            }
        }
        q[w] = 2.0 * acc;
    }
    let offset = r_y_eps.iter().map(|z| z.norm_sqr()).sum();
    NormalSystem { bin, a, q, offset }
}

fn flat(a: &[[f64; N]; N]) -> [f64; N * N] {
    let mut f = [0.0; N * N];
    for (i, row) in a.iter().enumerate() {
        f[i * N..(i + 1) * N].copy_from_slice(row);
    }
    f
}

fn condition_number(a: &[[f64; N]; N]) -> f64 {
    let vals = sym_eigenvalues(&flat(a), N);
    let max = vals[0].abs();
    let min = vals.last().unwrap().abs();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Most collinear component pair, used to name the culprits when the
/// system degenerates (e.g. the interferer DoA hits the desired DoA).
fn most_collinear_pair(a: &[[f64; N]; N]) -> (&'static str, &'static str) {
    let mut best = (0, 1);
    let mut best_corr = f64::NEG_INFINITY;
    for w in 0..N {
        for z in (w + 1)..N {
            let denom = (a[w][w] * a[z][z]).sqrt();
            if denom <= 0.0 {
                continue;
            }
            let corr = (a[w][z] / denom).abs();
            if corr > best_corr {
                best_corr = corr;
                best = (w, z);
            }
        }
    }
    (COMPONENT_NAMES[best.0], COMPONENT_NAMES[best.1])
}

fn degenerate_error(sys: &NormalSystem, condition: f64) -> CoreError {
    let (first, second) = most_collinear_pair(&sys.a);
    CoreError::DegenerateSystem {
        bin: sys.bin,
        first,
        second,
        condition,
    }
}

/// Returns a solvable copy of `A`, bumping the diagonal once when the
/// condition number exceeds the guard. A hard limit keeps exact rank
/// collapse an error instead of silently resolving it.
fn guarded_matrix(sys: &NormalSystem) -> Result<[[f64; N]; N]> {
    let cond = condition_number(&sys.a);
    if cond < CONDITION_LIMIT {
        return Ok(sys.a);
    }
    if cond >= CONDITION_HARD_LIMIT {
        return Err(degenerate_error(sys, cond));
    }
    let trace: f64 = (0..N).map(|i| sys.a[i][i]).sum();
    let bump = 1e-10 * trace / N as f64;
    let mut a = sys.a;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += bump;
    }
    let cond2 = condition_number(&a);
    if cond2 < CONDITION_LIMIT {
        Ok(a)
    } else {
        Err(degenerate_error(sys, cond))
    }
}

/// Unconstrained minimizer `A^{ -1} q`; entries may be negative.
pub fn solve_unconstrained(sys: &NormalSystem) -> Result<[f64; N]> {
    let a = guarded_matrix(sys)?;
    let sol = solve_real(&flat(&a), &sys.q, N)
        .ok_or_else(|| degenerate_error(sys, f64::INFINITY))?;
    let mut sigma = [0.0; N];
    sigma.copy_from_slice(&sol);
    // Residual sanity: ||A s - q|| <= 1e-8 ||q||.
    let mut res = 0.0;
    let mut qn = 0.0;
    for w in 0..N {
        let mut acc = -sys.q[w];
        for z in 0..N {
            acc += a[w][z] * sigma[z];
        }
        res += acc * acc;
        qn += sys.q[w] * sys.q[w];
    }
    if res.sqrt() > 1e-8 * qn.sqrt().max(f64::MIN_POSITIVE) {
        return Err(degenerate_error(sys, condition_number(&a)));
    }
    Ok(sigma)
}

/// Result of the active-inactive constraint analysis for one bin.
#[derive(Debug, Clone, Serialize)]
pub struct ActiveSetState {
    /// Constrained minimizer, all entries >= 0.
    pub sigma: [f64; N],
    /// Components clamped to zero.
    pub active: [bool; N],
    /// Fit cost at `sigma`.
    pub cost: f64,
    /// Lagrange multipliers, nonzero only on active entries.
    pub multipliers: [f64; N],
    /// Number of linear solves spent (<= 16).
    pub solves: usize,
    /// Unconstrained solution the analysis started from.
    pub unconstrained: [f64; N],
}

/// Solve the reduced system with the `active` entries deleted; returns the
/// full-length candidate with active entries at exactly zero.
fn reduced_candidate(a: &[[f64; N]; N], q: &[f64; N], active: &[bool; N]) -> Option<[f64; N]> {
    let free: Vec<usize> = (0..N).filter(|&i| !active[i]).collect();
    let mut sigma = [0.0; N];
    if free.is_empty() {
        return Some(sigma);
    }
    let nf = free.len();
    let mut sub = vec![0.0; nf * nf];
    let mut rhs = vec![0.0; nf];
    for (ri, &i) in free.iter().enumerate() {
        rhs[ri] = q[i];
        for (ci, &j) in free.iter().enumerate() {
            sub[ri * nf + ci] = a[i][j];
        }
    }
    let sol = solve_real(&sub, &rhs, nf)?;
    for (ri, &i) in free.iter().enumerate() {
        sigma[i] = sol[ri];
    }
    Some(sigma)
}

/// Nonnegative variance solve by active-set enumeration.
///
/// Starts at the unconstrained minimizer. If it is feasible it is returned
/// as-is. Otherwise every nonempty active subset is tried in order of
/// growing cardinality and the feasible candidate with the lowest cost
/// wins; ties fall to the earliest candidate, i.e. smallest active set and
/// lexicographic (x, p, gamma, v) order. That is 1 + 15 linear solves at
/// worst. Restricting the enumeration to subsets of the negative entries,
/// or breaking at the first feasible tier, both return suboptimal points
/// on rare couplings: clamping one component can drag a previously
/// positive component negative, so the optimal active set may contain
/// indices that were nonnegative in the unconstrained solution, and a
/// shallow tier may hold a feasible stationary point that is not the
/// constrained minimum.
pub fn solve_nonnegative(sys: &NormalSystem) -> Result<ActiveSetState> {
    let unconstrained = solve_unconstrained(sys)?;
    let a = guarded_matrix(sys)?;
    let mut solves = 1usize;

    let scale = unconstrained
        .iter()
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let feas_tol = -1e-12 * scale;

    if unconstrained.iter().all(|&v| v >= 0.0) {
        return Ok(ActiveSetState {
            sigma: unconstrained,
            active: [false; N],
            cost: sys.cost(&unconstrained),
            multipliers: [0.0; N],
            solves,
            unconstrained,
        });
    }

    let all: Vec<usize> = (0..N).collect();
    let mut best: Option<([f64; N], [bool; N], f64)> = None;

    for tier in 1..=N {
        for combo in combinations(&all, tier) {
            let mut active = [false; N];
            for &i in &combo {
                active[i] = true;
            }
            let Some(mut cand) = reduced_candidate(&a, &sys.q, &active) else {
                continue;
            };
            solves += 1;
            let feasible = (0..N).all(|i| active[i] || cand[i] >= feas_tol);
            if !feasible {
                continue;
            }
            for v in cand.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let cost = sys.cost(&cand);
            if best.as_ref().is_none_or(|(_, _, c)| cost < *c) {
                best = Some((cand, active, cost));
            }
        }
    }

    // The all-active candidate (sigma = 0) is always feasible, so a best
    // candidate exists; this fallback only guards pathological arithmetic.
    let (sigma, active, cost) = best.unwrap_or_else(|| {
        let zero = [0.0; N];
        let cost = sys.cost(&zero);
        (zero, [true; N], cost)
    });

    let grad = sys.gradient(&sigma);
    let mut multipliers = [0.0; N];
    for i in 0..N {
        if active[i] {
            multipliers[i] = grad[i];
        }
    }

    Ok(ActiveSetState {
        sigma,
        active,
        cost,
        multipliers,
        solves,
        unconstrained,
    })
}

/// All `size`-element subsets of `items`, in lexicographic order.
fn combinations(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(items: &[usize], size: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            rec(items, size, i + 1, current, out);
            current.pop();
        }
    }
    rec(items, size, 0, &mut current, &mut out);
    out
}

/// Solve every bin of a covariance set.
pub fn solve_all_bins(comps: &BinCovarianceSet) -> Result<Vec<ActiveSetState>> {
    (0..comps.num_bins())
        .map(|k| solve_nonnegative(&build_system(comps, k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::Variances;
    use crate::geometry::{
        directional_pseudocov, isotropic_pseudocov, relative_geometry, steering_vector,
        white_pseudocov, Doa, PseudoCovKind, SensorArray,
    };
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn comps_for(theta_b_deg: f64) -> BinCovarianceSet {
        let array = SensorArray::ura(2, 2, 0.02, 16000.0, 64).unwrap();
        let geom = relative_geometry(&array).unwrap();
        let d = steering_vector(&array, &geom, Doa::from_degrees(0.0, 0.0));
        let b = steering_vector(&array, &geom, Doa::from_degrees(theta_b_deg, 0.0));
        let nbins = array.num_bins();
        BinCovarianceSet {
            r_y: (0..nbins)
                .map(|_| crate::linalg::identity(array.num_sensors()))
                .collect(),
            desired: directional_pseudocov(&d, PseudoCovKind::Desired),
            interferer: directional_pseudocov(&b, PseudoCovKind::Interferer),
            isotropic: isotropic_pseudocov(&array, &geom),
            white: white_pseudocov(array.num_sensors(), nbins),
            epsilon: 1e-4,
        }
    }

    /// Independent brute force: try all 16 active subsets, keep the
    /// feasible candidate with the lowest explicitly evaluated cost.
    fn brute_force(sys: &NormalSystem) -> ([f64; N], f64) {
        let mut best: Option<([f64; N], f64)> = None;
        for mask in 0..(1u32 << N) {
            let mut active = [false; N];
            for i in 0..N {
                if mask & (1 << i) != 0 {
                    active[i] = true;
                }
            }
            let Some(cand) = reduced_candidate(&sys.a, &sys.q, &active) else {
                continue;
            };
            if cand.iter().any(|&v| v < -1e-12) {
                continue;
            }
            let mut clamped = cand;
            for v in clamped.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let cost = sys.cost(&clamped);
            if best.is_none() || cost < best.unwrap().1 {
                best = Some((clamped, cost));
            }
        }
        best.unwrap()
    }

    fn random_psd_system(rng: &mut ChaCha8Rng) -> NormalSystem {
        let mut g = [[0.0; N]; N];
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random::<f64>() * 2.0 - 1.0;
            }
        }
        let mut a = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                let mut acc = 0.0;
                for k in 0..N {
                    acc += g[k][i] * g[k][j];
                }
                a[i][j] = 2.0 * acc;
            }
            a[i][i] += 0.05;
        }
        let mut q = [0.0; N];
        for v in q.iter_mut() {
            *v = rng.random::<f64>() * 4.0 - 2.0;
        }
        NormalSystem {
            bin: 0,
            a,
            q,
            offset: rng.random::<f64>() * 3.0 + 1.0,
        }
    }

    #[test]
    fn system_entries_match_closed_forms() {
        let comps = comps_for(60.0);
        let m = comps.num_sensors() as f64;
        for k in [1usize, 7, 20] {
            let sys = build_system(&comps, k);
            // A[v][v] = 2M (identity has M unit entries).
            assert_abs_diff_eq!(sys.a[3][3], 2.0 * m, epsilon = 1e-12);
            // A[x][x] = 2M^2 (every entry of a steering outer product has unit modulus).
            assert_abs_diff_eq!(sys.a[0][0], 2.0 * m * m, epsilon = 1e-9);
            // A[x][v] = 2M (only the unit diagonal of the identity overlaps).
            assert_abs_diff_eq!(sys.a[0][3], 2.0 * m, epsilon = 1e-10);
            // Symmetry and positive diagonal.
            for w in 0..N {
                assert!(sys.a[w][w] > 0.0);
                for z in 0..N {
                    assert_abs_diff_eq!(sys.a[w][z], sys.a[z][w], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn diagonal_system_recovers_target() {
        let mut a = [[0.0; N]; N];
        let d = [1.0, 2.0, 3.0, 4.0];
        let s = [0.5, 0.25, 2.0, 1.5];
        let mut q = [0.0; N];
        for i in 0..N {
            a[i][i] = 2.0 * d[i];
            q[i] = 2.0 * d[i] * s[i];
        }
        let sys = NormalSystem { bin: 0, a, q, offset: 0.0 };
        let sol = solve_unconstrained(&sys).unwrap();
        for i in 0..N {
            assert_abs_diff_eq!(sol[i], s[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn construct_then_recover_exact_model() {
        let mut comps = comps_for(50.0);
        let sigma_true = [0.8, 0.3, 0.15, 0.05];
        let v = Variances {
            per_bin: vec![sigma_true; comps.num_bins()],
        };
        comps.r_y = crate::covariance::model_covariance_all(&v, &comps).unwrap();
        for k in [2usize, 9, 25] {
            let sys = build_system(&comps, k);
            let sol = solve_unconstrained(&sys).unwrap();
            for i in 0..N {
                assert_abs_diff_eq!(sol[i], sigma_true[i], epsilon = 1e-8);
            }
            // Residual cost at the recovered solution is ~0.
            assert!(sys.cost(&sol).abs() < 1e-12 * sys.offset.max(1.0));
        }
    }

    #[test]
    fn interferer_at_desired_doa_degenerates() {
        let comps = comps_for(0.0); // b == d
        let sys = build_system(&comps, 10);
        match solve_unconstrained(&sys) {
            Err(CoreError::DegenerateSystem { first, second, .. }) => {
                assert_eq!(first, "desired");
                assert_eq!(second, "interferer");
            }
            other => panic!("expected degenerate system, got {other:?}"),
        }
    }

    #[test]
    fn feasible_unconstrained_returned_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let mut found = 0;
        while found < 50 {
            let sys = random_psd_system(&mut rng);
            let sol = solve_unconstrained(&sys).unwrap();
            if sol.iter().all(|&v| v >= 0.0) {
                let state = solve_nonnegative(&sys).unwrap();
                assert_eq!(state.sigma, sol);
                assert_eq!(state.active, [false; N]);
                assert_eq!(state.solves, 1);
                found += 1;
            }
        }
    }

    #[test]
    fn crafted_instance_matches_brute_force() {
        // Build A from a covariance set, then choose q so the unconstrained
        // solution is exactly (1, -0.5, 2, 0.3).
        let comps = comps_for(70.0);
        let base = build_system(&comps, 12);
        let target = [1.0, -0.5, 2.0, 0.3];
        let mut q = [0.0; N];
        for w in 0..N {
            q[w] = (0..N).map(|z| base.a[w][z] * target[z]).sum();
        }
        let sys = NormalSystem {
            bin: 12,
            a: base.a,
            q,
            offset: 5.0,
        };
        let sol = solve_unconstrained(&sys).unwrap();
        for i in 0..N {
            assert_abs_diff_eq!(sol[i], target[i], epsilon = 1e-9);
        }
        let state = solve_nonnegative(&sys).unwrap();
        let (bf_sigma, bf_cost) = brute_force(&sys);
        assert_abs_diff_eq!(state.cost, bf_cost, epsilon = 1e-10 * bf_cost.abs().max(1.0));
        for i in 0..N {
            assert_abs_diff_eq!(state.sigma[i], bf_sigma[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn all_negative_pull_gives_zero_solution() {
        let comps = comps_for(40.0);
        let base = build_system(&comps, 15);
        // q = -A 1 makes the unconstrained solution -1 in every component.
        let mut q = [0.0; N];
        for w in 0..N {
            q[w] = -(0..N).map(|z| base.a[w][z]).sum::<f64>();
        }
        // KKT at zero needs -q >= 0, i.e. A*1 >= 0 elementwise.
        assert!(q.iter().all(|&v| v <= 0.0));
        let sys = NormalSystem {
            bin: 15,
            a: base.a,
            q,
            offset: 1.0,
        };
        let state = solve_nonnegative(&sys).unwrap();
        assert_eq!(state.sigma, [0.0; N]);
        assert_eq!(state.active, [true; N]);
        assert!(state.solves <= 16);
        // Multipliers are the gradient on active entries: -q >= 0.
        for i in 0..N {
            assert!(state.multipliers[i] >= 0.0);
        }
    }

    #[test]
    fn fuzz_oracle_equivalence_and_theorems() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut subset_violations = 0usize;
        let mut infeasible = 0usize;
        for iter in 0..2000 {
            let sys = random_psd_system(&mut rng);
            let state = solve_nonnegative(&sys).unwrap();
            assert!(state.solves <= 16, "iter {iter}: {} solves", state.solves);
            let (_, bf_cost) = brute_force(&sys);
            let rel = (state.cost - bf_cost).abs() / bf_cost.abs().max(1e-30);
            assert!(
                rel < 1e-10,
                "iter {iter}: cost {} vs brute force {}",
                state.cost,
                bf_cost
            );
            // Boundary theorem: infeasible unconstrained -> >= 1 active zero.
            if state.unconstrained.iter().any(|&v| v < 0.0) {
                infeasible += 1;
                assert!(
                    state.sigma.iter().any(|&v| v == 0.0),
                    "iter {iter}: no boundary entry"
                );
                // Active-subset inclusion: holds for the covariance-fit
                // systems this solver exists for, but generic PSD couplings
                // can clamp a component that was nonnegative unconstrained.
                if (0..N).any(|i| state.active[i] && state.unconstrained[i] >= 0.0) {
                    subset_violations += 1;
                }
            }
            // Cost monotonicity vs the unconstrained optimum.
            let unc_cost = sys.cost(&state.unconstrained);
            assert!(state.cost >= unc_cost - 1e-9 * unc_cost.abs().max(1.0));
        }
        assert!(infeasible > 200, "corpus should exercise the active set");
        // The subset-inclusion claim is not a theorem: couplings routinely
        // make the optimum clamp coordinates that were nonnegative in the
        // unconstrained solution. The seeded corpus demonstrates this.
        assert!(subset_violations > 0);
    }

    /// Concrete instance where the optimal active set is NOT a subset of
    /// the unconstrained negatives: clamping component 1 drags component 0
    /// negative, so the constrained minimum clamps both.
    #[test]
    fn active_set_can_leave_negative_subset() {
        let a = [
            [2.0, 0.0, 0.8, 1.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.8, 0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
        ];
        let q = [0.5, 1.0, -1.0, 1.0];
        let sys = NormalSystem { bin: 0, a, q, offset: 4.0 };
        let unc = solve_unconstrained(&sys).unwrap();
        assert!(unc[0] > 0.0 && unc[2] < 0.0, "unconstrained {unc:?}");
        let state = solve_nonnegative(&sys).unwrap();
        let (bf_sigma, bf_cost) = brute_force(&sys);
        assert!((state.cost - bf_cost).abs() < 1e-12 * bf_cost.max(1.0));
        for i in 0..N {
            assert_abs_diff_eq!(state.sigma[i], bf_sigma[i], epsilon = 1e-10);
        }
        // The optimum clamps component 0 even though it was positive.
        assert!(state.active[0] && state.unconstrained[0] > 0.0);
    }

    #[test]
    fn scale_equivariance() {
        let mut comps = comps_for(65.0);
        let sigma_true = [0.4, 0.9, 0.2, 0.6];
        let v = Variances {
            per_bin: vec![sigma_true; comps.num_bins()],
        };
        comps.r_y = crate::covariance::model_covariance_all(&v, &comps).unwrap();
        let k = 11;
        let state1 = solve_nonnegative(&build_system(&comps, k)).unwrap();

        let alpha = 7.5;
        let mut scaled = comps.clone();
        scaled.epsilon *= alpha;
        for r in scaled.r_y.iter_mut() {
            r.mapv_inplace(|z| z * alpha);
        }
        let state2 = solve_nonnegative(&build_system(&scaled, k)).unwrap();
        assert_eq!(state1.active, state2.active);
        for i in 0..N {
            assert_abs_diff_eq!(state2.sigma[i], alpha * state1.sigma[i], epsilon = 1e-8);
        }
    }
}
