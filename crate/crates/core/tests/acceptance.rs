//! Acceptance suite. Each test covers one numbered criterion and prints a
//! PASS line (run with `-- --nocapture` to see them). Criterion 11
//! (pipeline determinism) lives in the CLI crate's acceptance test.
//!
//! Criterion 2b is expected to fail: the subset-inclusion property it
//! encodes is not a theorem (see `active_set_can_leave_negative_subset`
//! in the solver unit tests for a deterministic counterexample). The
//! assertion is kept faithful to the stated property and reports the
//! measured violation count.

use std::sync::Mutex;
use std::time::Instant;

/// The scene-heavy criteria each parallelize internally; serialize them
/// against one another so per-criterion runtime budgets are meaningful.
static HEAVY_SCENES: Mutex<()> = Mutex::new(());

fn heavy_guard() -> std::sync::MutexGuard<'static, ()> {
    HEAVY_SCENES.lock().unwrap_or_else(|e| e.into_inner())
}

use ncmbeam_core::beamform::{lcmp, lcmv, mvdr, ConstraintSet, MvdrForm};
use ncmbeam_core::covariance::{
    assemble_ncm, model_covariance_all, sample_covariance, BinCovarianceSet, Variances,
};
use ncmbeam_core::doa::{
    broadband_cost, doa_gradient, joint_estimate, DescentConfig, EstimationContext,
    GradientForm,
};
use ncmbeam_core::geometry::{
    directional_pseudocov, isotropic_pseudocov, relative_geometry, steering_vector,
    white_pseudocov, Doa, PseudoCovKind, RelativeGeometry, SensorArray,
};
use ncmbeam_core::linalg::{hdot, identity};
use ncmbeam_core::metrics::{
    angular_error_deg, enhancement_metrics, filter_component, filter_frames, median,
    reference_component, reference_frames, theoretical_metrics, ComponentSignals,
};
use ncmbeam_core::music::{estimate_music_doa, phasor_average, AverageMethod, MusicConfig};
use ncmbeam_core::scenario::{
    diffuse_field, model_frames, synthesize, ScenarioConfig, SourceKind, SCR_VALUES, SIR_VALUES,
    THETA_B_VALUES,
};
use ncmbeam_core::solver::{solve_nonnegative, solve_unconstrained, NormalSystem};
use ncmbeam_core::stft::{stft, StftConfig};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const N: usize = 4;

// ---------------------------------------------------------------------------
// Independent oracle and corpus for the solver criteria

/// Exhaustive 16-subset oracle, written independently of the solver: for
/// every active subset, solve the reduced system by Cramer-style dense
/// elimination, keep feasible candidates, evaluate the explicit quadratic
/// cost and take the minimum.
fn oracle_best_cost(sys: &NormalSystem) -> (f64, [f64; N]) {
    let mut best: Option<(f64, [f64; N])> = None;
    for mask in 0u32..16 {
        let free: Vec<usize> = (0..N).filter(|&i| mask & (1 << i) == 0).collect();
        let mut sigma = [0.0; N];
        if !free.is_empty() {
            let nf = free.len();
            let mut a = vec![0.0; nf * nf];
            let mut b = vec![0.0; nf];
            for (ri, &i) in free.iter().enumerate() {
                b[ri] = sys.q[i];
                for (ci, &j) in free.iter().enumerate() {
                    a[ri * nf + ci] = sys.a[i][j];
                }
            }
            match gauss_solve(&mut a, &mut b, nf) {
                Some(sol) => {
                    for (ri, &i) in free.iter().enumerate() {
                        sigma[i] = sol[ri];
                    }
                }
                None => continue,
            }
        }
        if sigma.iter().any(|&v| v < -1e-12) {
            continue;
        }
        for v in sigma.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        // Explicit cost: 0.5 s^T A s - q^T s + offset.
        let mut quad = 0.0;
        let mut lin = 0.0;
        for i in 0..N {
            lin += sys.q[i] * sigma[i];
            for j in 0..N {
                quad += sigma[i] * sys.a[i][j] * sigma[j];
            }
        }
        let cost = 0.5 * quad - lin + sys.offset;
        if best.is_none() || cost < best.unwrap().0 {
            best = Some((cost, sigma));
        }
    }
    best.expect("all-active candidate is always feasible")
}

fn gauss_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-280 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for c in (i + 1)..n {
            x[i] -= a[i * n + c] * x[c];
        }
        x[i] /= a[i * n + i];
    }
    Some(x)
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
        offset: 1.0 + rng.random::<f64>() * 3.0,
    }
}

fn corpus(seed: u64, count: usize) -> Vec<NormalSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_psd_system(&mut rng)).collect()
}

#[test]
fn criterion_01_active_set_oracle() {
    let start = Instant::now();
    let systems = corpus(0xACCE_0001, 1000);
    for (i, sys) in systems.iter().enumerate() {
        let state = solve_nonnegative(sys).unwrap();
        assert!(state.solves <= 16, "instance {i}: {} solves", state.solves);
        let (oracle_cost, _) = oracle_best_cost(sys);
        let rel = (state.cost - oracle_cost).abs() / oracle_cost.abs().max(1e-30);
        assert!(
            rel < 1e-10,
            "instance {i}: solver {:.15e} vs oracle {:.15e}",
            state.cost,
            oracle_cost
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 1: PASS — 1000 random PSD systems match the exhaustive \
         16-subset oracle within 1e-10 relative, <=16 solves each ({elapsed:?})"
    );
}

#[test]
fn criterion_02a_boundary_theorem() {
    let systems = corpus(0xACCE_0001, 1000);
    let mut infeasible = 0;
    for (i, sys) in systems.iter().enumerate() {
        let unc = solve_unconstrained(sys).unwrap();
        if unc.iter().all(|&v| v >= 0.0) {
            continue;
        }
        infeasible += 1;
        let state = solve_nonnegative(sys).unwrap();
        assert!(
            state.sigma.iter().any(|&v| v == 0.0),
            "instance {i}: infeasible unconstrained minimum but interior constrained solution"
        );
    }
    assert!(infeasible > 200);
    println!(
        "ACCEPTANCE 2a: PASS — boundary theorem held on all {infeasible} \
         infeasible-unconstrained instances"
    );
}

#[test]
fn criterion_02b_active_subset_theorem() {
    // Faithful encoding of the claimed property: the active set of the
    // constrained solution is contained in the negative entries of the
    // unconstrained one, with zero violations over the corpus. The
    // property is not a theorem (the constrained minimum may clamp a
    // coordinate that was positive unconstrained when couplings drag it
    // negative on the reduced face), so this criterion fails; the
    // decisions ledger carries the analysis and a deterministic
    // counterexample lives in the solver unit tests.
    let systems = corpus(0xACCE_0001, 1000);
    let mut infeasible = 0;
    let mut violations = 0;
    for sys in &systems {
        let unc = solve_unconstrained(sys).unwrap();
        if unc.iter().all(|&v| v >= 0.0) {
            continue;
        }
        infeasible += 1;
        let state = solve_nonnegative(sys).unwrap();
        if (0..N).any(|i| state.active[i] && unc[i] >= 0.0) {
            violations += 1;
        }
    }
    assert_eq!(
        violations, 0,
        "ACCEPTANCE 2b: FAIL — active set escaped the negative-entry subset on \
         {violations}/{infeasible} infeasible instances; the claimed inclusion is \
         not a theorem (optimal active sets may clamp coordinates that were \
         nonnegative unconstrained)"
    );
    println!("ACCEPTANCE 2b: PASS — active sets stayed within negative entries");
}

#[test]
fn criterion_03_gradient_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    let mut tested = 0;
    while tested < 200 {
        let m = 4 + (tested % 4);
        let positions: Vec<[f64; 3]> = (0..m)
            .map(|_| [rng.random::<f64>() * 0.08, rng.random::<f64>() * 0.08, 0.0])
            .collect();
        let Ok(array) = SensorArray::new(positions, 0, 16000.0, 64, 343.0) else {
            continue;
        };
        let geom = relative_geometry(&array).unwrap();
        let theta_true = rng.random::<f64>() * 340.0 - 170.0;
        let phi_true = 5.0 + rng.random::<f64>() * 70.0;
        let d = steering_vector(&array, &geom, Doa::from_degrees(0.0, 0.0));
        let b = steering_vector(&array, &geom, Doa::from_degrees(theta_true, phi_true));
        let nbins = array.num_bins();
        let mut comps = BinCovarianceSet {
            r_y: vec![identity(m); nbins],
            desired: directional_pseudocov(&d, PseudoCovKind::Desired),
            interferer: directional_pseudocov(&b, PseudoCovKind::Interferer),
            isotropic: isotropic_pseudocov(&array, &geom),
            white: white_pseudocov(m, nbins),
            epsilon: 1e-4,
        };
        let v = Variances {
            per_bin: (0..nbins)
                .map(|k| {
                    [
                        0.5 + rng.random::<f64>(),
                        0.3 + rng.random::<f64>(),
                        rng.random::<f64>() * 0.5,
                        0.05 + rng.random::<f64>() * 0.2,
                    ]
                    .map(|x| x + 1e-3 * k as f64)
                })
                .collect(),
        };
        comps.r_y = model_covariance_all(&v, &comps).unwrap();
        let ctx = EstimationContext::new(&array, &geom, &comps, Doa::from_degrees(0.0, 0.0));
        // Random evaluation point with elevation at least 2 degrees from
        // {0, +-90}.
        let eval = Doa::from_degrees(
            theta_true + rng.random::<f64>() * 30.0 - 15.0,
            (phi_true + rng.random::<f64>() * 20.0 - 10.0).clamp(2.5, 87.5),
        );
        let (gt, gp) = doa_gradient(&ctx, &v, eval, GradientForm::Full).unwrap();
        let h = 1e-5;
        let fd_t = (broadband_cost(&ctx, &v, Doa::new(eval.azimuth + h, eval.elevation))
            - broadband_cost(&ctx, &v, Doa::new(eval.azimuth - h, eval.elevation)))
            / (2.0 * h);
        let fd_p = (broadband_cost(&ctx, &v, Doa::new(eval.azimuth, eval.elevation + h))
            - broadband_cost(&ctx, &v, Doa::new(eval.azimuth, eval.elevation - h)))
            / (2.0 * h);
        let scale = gt.abs().max(gp.abs()).max(1e-12);
        assert!(
            (gt - fd_t).abs() <= 1e-4 * scale.max(fd_t.abs()),
            "instance {tested}: d/dtheta {gt:.9e} vs fd {fd_t:.9e}"
        );
        assert!(
            (gp - fd_p).abs() <= 1e-4 * scale.max(fd_p.abs()),
            "instance {tested}: d/dphi {gp:.9e} vs fd {fd_p:.9e}"
        );
        tested += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 3: PASS — analytic gradient matched central finite \
         differences within 1e-4 relative on 200 instances ({elapsed:?})"
    );
}

#[test]
fn criterion_04_construct_then_recover() {
    let _serial = heavy_guard();
    let seeds: Vec<u64> = (0..50).collect();
    let failures: Vec<String> = seeds
        .par_iter()
        .filter_map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0004 + seed);
            let array = SensorArray::ura(3, 3, 0.025, 16000.0, 64).unwrap();
            let geom = relative_geometry(&array).unwrap();
            let theta_true = rng.random::<f64>() * 320.0 - 160.0;
            let phi_true = 10.0 + rng.random::<f64>() * 50.0;
            // Keep the interferer away from the desired direction.
            let theta_true = if theta_true.abs() < 20.0 {
                theta_true + 40.0
            } else {
                theta_true
            };
            let truth = Doa::from_degrees(theta_true, phi_true);
            let d = steering_vector(&array, &geom, Doa::from_degrees(0.0, 0.0));
            let b = steering_vector(&array, &geom, truth);
            let nbins = array.num_bins();
            let mut comps = BinCovarianceSet {
                r_y: vec![identity(9); nbins],
                desired: directional_pseudocov(&d, PseudoCovKind::Desired),
                interferer: directional_pseudocov(&b, PseudoCovKind::Interferer),
                isotropic: isotropic_pseudocov(&array, &geom),
                white: white_pseudocov(9, nbins),
                epsilon: 1e-4,
            };
            let v_true = Variances {
                per_bin: (0..nbins)
                    .map(|_| {
                        [
                            0.2 + rng.random::<f64>(),
                            0.2 + rng.random::<f64>(),
                            0.1 + rng.random::<f64>() * 0.5,
                            0.05 + rng.random::<f64>() * 0.3,
                        ]
                    })
                    .collect(),
            };
            comps.r_y = model_covariance_all(&v_true, &comps).unwrap();
            let ctx = EstimationContext::new(&array, &geom, &comps, Doa::from_degrees(0.0, 0.0));

            // Start 10-15 degrees away, split across azimuth and elevation.
            let off = 10.0 + rng.random::<f64>() * 5.0;
            let az_share = rng.random::<f64>();
            let sgn_t = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let sgn_p = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let start = Doa::from_degrees(
                theta_true + sgn_t * off * az_share,
                (phi_true + sgn_p * off * (1.0 - az_share)).clamp(3.0, 85.0),
            );
            let mut cfg = DescentConfig::new(start);
            cfg.form = GradientForm::Full;
            cfg.azimuth_only = false;
            cfg.tol_grad = 1e-13;
            cfg.max_outer = 120;
            cfg.max_iters = 600;

            let est = match joint_estimate(&ctx, &cfg) {
                Ok(e) => e,
                Err(e) => return Some(format!("seed {seed}: {e}")),
            };
            let angle_err = angular_error_deg(est.doa, truth);
            if angle_err > 0.1 {
                return Some(format!(
                    "seed {seed}: angular error {angle_err:.4} deg (true {theta_true:.2}/{phi_true:.2}, got {:.2}/{:.2})",
                    est.doa.azimuth.to_degrees(),
                    est.doa.elevation.to_degrees()
                ));
            }
            for k in ctx.bin_range.clone() {
                let t = &v_true.per_bin[k];
                let g = &est.variances.per_bin[k];
                let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
                let err = (0..4)
                    .map(|c| (g[c] - t[c]) * (g[c] - t[c]))
                    .sum::<f64>()
                    .sqrt();
                if err > 1e-6 * norm {
                    return Some(format!(
                        "seed {seed}: bin {k} variance error {:.3e} relative",
                        err / norm
                    ));
                }
            }
            None
        })
        .collect();
    assert!(failures.is_empty(), "failures:\n{}", failures.join("\n"));
    println!(
        "ACCEPTANCE 4: PASS — 50 exact-model scenes recovered variances \
         within 1e-6 relative and DoA within 0.1 degrees from 10-15 degree offsets"
    );
}

// ---------------------------------------------------------------------------
// Scene helpers for the benchmark criteria

fn bench_array() -> (SensorArray, RelativeGeometry, StftConfig) {
    let array = SensorArray::ura(4, 4, 0.02, 16000.0, 128).unwrap();
    let geom = relative_geometry(&array).unwrap();
    let cfg = StftConfig::hamming_half_overlap(128).unwrap();
    (array, geom, cfg)
}

fn scene_config(t60: f64, sir: f64, scr: f64, theta_b: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        t60_ms: t60,
        d_x_m: 1.5,
        d_p_m: 1.5,
        theta_b_deg: theta_b,
        theta_d_deg: 0.0,
        sir_db: sir,
        scr_db: scr,
        white_snr_db: 30.0,
        seed,
        duration_s: 1.5,
        desired_source: SourceKind::SpeechLike { formant_scale: 1.0 },
        interferer_source: SourceKind::SpeechLike { formant_scale: 1.2 },
    }
}

struct SceneEstimates {
    comps: BinCovarianceSet,
    ncm_doa_deg: f64,
    ncm: ncmbeam_core::covariance::NoiseCovariance,
    msc_deg: f64,
    wmsc_deg: f64,
}

fn estimate_scene(
    cfg: &ScenarioConfig,
    array: &SensorArray,
    geom: &RelativeGeometry,
    stft_cfg: &StftConfig,
    with_music: bool,
) -> SceneEstimates {
    let scene = synthesize(cfg, array, geom).unwrap();
    let frames = stft(&scene.mixture(), stft_cfg).unwrap();
    let r_y = sample_covariance(&frames).unwrap();
    let d = steering_vector(array, geom, scene.theta_d);
    let placeholder = steering_vector(array, geom, Doa::from_degrees(90.0, 0.0));
    let comps = BinCovarianceSet {
        r_y,
        desired: directional_pseudocov(&d, PseudoCovKind::Desired),
        interferer: directional_pseudocov(&placeholder, PseudoCovKind::Interferer),
        isotropic: isotropic_pseudocov(array, geom),
        white: white_pseudocov(array.num_sensors(), array.num_bins()),
        epsilon: 1e-4,
    };
    let ctx = EstimationContext::new(array, geom, &comps, scene.theta_d);

    // Initial guess 10-15 degrees off the truth, per the evaluation
    // protocol (a plausible prior estimate).
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1717);
    let off = 10.0 + rng.random::<f64>() * 5.0;
    let sgn = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let start = Doa::from_degrees(cfg.theta_b_deg + sgn * off, 0.0);
    let mut dcfg = DescentConfig::new(start);
    dcfg.form = GradientForm::Planar;
    dcfg.azimuth_only = true;
    dcfg.tol_grad = 1e-9;
    dcfg.max_outer = 50;
    dcfg.max_iters = 300;
    let est = joint_estimate(&ctx, &dcfg).unwrap();

    let (msc_deg, wmsc_deg) = if with_music {
        let mcfg = MusicConfig::default();
        let msc = estimate_music_doa(
            &comps.r_y,
            array,
            geom,
            scene.theta_d,
            &mcfg,
            AverageMethod::Msc,
        )
        .unwrap();
        let wmsc_theta = phasor_average(&msc.per_bin, AverageMethod::WMsc).unwrap();
        (msc.theta.to_degrees(), wmsc_theta.to_degrees())
    } else {
        (f64::NAN, f64::NAN)
    };

    SceneEstimates {
        comps,
        ncm_doa_deg: est.doa.azimuth.to_degrees(),
        ncm: est.ncm,
        msc_deg,
        wmsc_deg,
    }
}

#[test]
fn criterion_05_desk_scale_doa_benchmark() {
    let _serial = heavy_guard();
    let start = Instant::now();
    let (array, geom, stft_cfg) = bench_array();
    let seeds_per_angle = 20;
    let mut jobs = Vec::new();
    for &theta_b in &THETA_B_VALUES {
        for s in 0..seeds_per_angle {
            jobs.push(scene_config(
                0.0,
                0.0,
                5.0,
                theta_b,
                0xBE5C_0000 + (theta_b as u64) * 100 + s,
            ));
        }
    }
    let results: Vec<(f64, f64, f64)> = jobs
        .par_iter()
        .map(|cfg| {
            let est = estimate_scene(cfg, &array, &geom, &stft_cfg, true);
            let truth = Doa::from_degrees(cfg.theta_b_deg, 0.0);
            (
                angular_error_deg(Doa::from_degrees(est.ncm_doa_deg, 0.0), truth),
                angular_error_deg(Doa::from_degrees(est.msc_deg, 0.0), truth),
                angular_error_deg(Doa::from_degrees(est.wmsc_deg, 0.0), truth),
            )
        })
        .collect();
    let ncm_med = median(&results.iter().map(|r| r.0).collect::<Vec<_>>());
    let msc_med = median(&results.iter().map(|r| r.1).collect::<Vec<_>>());
    let wmsc_med = median(&results.iter().map(|r| r.2).collect::<Vec<_>>());
    let elapsed = start.elapsed();
    assert!(
        ncm_med <= 5.0,
        "proposed estimator median error {ncm_med:.3} deg exceeds 5 deg"
    );
    assert!(
        ncm_med < msc_med,
        "proposed {ncm_med:.3} deg not below MSC {msc_med:.3} deg"
    );
    assert!(
        ncm_med < wmsc_med,
        "proposed {ncm_med:.3} deg not below wMSC {wmsc_med:.3} deg"
    );
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 5: PASS — 120 anechoic scenes: median angular error \
         proposed {ncm_med:.3} deg vs MSC {msc_med:.3} / wMSC {wmsc_med:.3} deg ({elapsed:?})"
    );
}

#[test]
fn criterion_06_beamformer_constraint_contracts() {
    let (array, geom, stft_cfg) = bench_array();
    let mut worst_d = 0.0f64;
    let mut worst_b = 0.0f64;
    let mut min_isrf = f64::INFINITY;
    for (i, &theta_b) in THETA_B_VALUES.iter().enumerate() {
        let cfg = scene_config(0.0, 0.0, 5.0, theta_b, 0xC0DE_0600 + i as u64);
        let scene = synthesize(&cfg, &array, &geom).unwrap();
        let est = estimate_scene(&cfg, &array, &geom, &stft_cfg, false);
        let d = steering_vector(&array, &geom, scene.theta_d);
        let b_true = steering_vector(&array, &geom, scene.theta_b);
        let cs = ConstraintSet::new(d.clone(), b_true.clone()).unwrap();

        let w_lcmv = lcmv(&est.ncm, &cs).unwrap();
        let w_mvdr = mvdr(&est.ncm, &d, MvdrForm::Standard).unwrap();
        let w_lcmp = lcmp(&est.comps.r_y, &cs, 1e-4).unwrap();

        for w in [&w_lcmv, &w_mvdr, &w_lcmp] {
            assert!(
                w.null_dropped.iter().all(|&k| k == 0),
                "null dropped beyond DC: {:?}",
                w.null_dropped
            );
            for k in 0..w.num_bins() {
                let hd = hdot(&w.bins[k], &cs.desired.bins[k]);
                worst_d = worst_d.max((hd - Complex64::new(1.0, 0.0)).norm());
            }
        }
        for w in [&w_lcmv, &w_lcmp] {
            for k in 0..w.num_bins() {
                if w.has_null(k) {
                    let hb = hdot(&w.bins[k], &cs.interferer.bins[k]);
                    worst_b = worst_b.max(hb.norm());
                }
            }
        }

        // Direct-path null: filter the interferer's separable direct-path
        // frames with the true-b LCMV weights.
        let p1_src = &scene.interferer_direct[array.reference_index()];
        let pf_frames = model_frames(p1_src, &b_true, &stft_cfg).unwrap();
        let p_f = filter_frames(&pf_frames, &w_lcmv, &stft_cfg).unwrap();
        let p1 = reference_frames(&pf_frames, array.reference_index(), &stft_cfg).unwrap();
        let var = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let isrf = 10.0 * (var(&p1) / var(&p_f).max(1e-300)).log10();
        min_isrf = min_isrf.min(isrf.min(120.0));
    }
    assert!(worst_d < 1e-10, "distortionless residual {worst_d:.3e}");
    assert!(worst_b < 1e-10, "null residual {worst_b:.3e}");
    assert!(min_isrf >= 60.0, "true-b LCMV ISRF {min_isrf:.2} dB");
    println!(
        "ACCEPTANCE 6: PASS — constraints within 1e-10 (worst d {worst_d:.2e}, \
         b {worst_b:.2e}), true-b LCMV ISRF >= {min_isrf:.1} dB on all scenes"
    );
}

#[test]
fn criterion_07_lcmv_lcmp_ideal_equivalence() {
    let (array, geom, _) = bench_array();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0007);
    let d = steering_vector(&array, &geom, Doa::from_degrees(0.0, 0.0));
    let b = steering_vector(&array, &geom, Doa::from_degrees(65.0, 0.0));
    let nbins = array.num_bins();
    let mut comps = BinCovarianceSet {
        r_y: vec![identity(16); nbins],
        desired: directional_pseudocov(&d, PseudoCovKind::Desired),
        interferer: directional_pseudocov(&b, PseudoCovKind::Interferer),
        isotropic: isotropic_pseudocov(&array, &geom),
        white: white_pseudocov(16, nbins),
        epsilon: 1e-4,
    };
    let v = Variances {
        per_bin: (0..nbins)
            .map(|_| {
                [
                    0.3 + rng.random::<f64>(),
                    0.2 + rng.random::<f64>(),
                    rng.random::<f64>() * 0.4,
                    0.02 + rng.random::<f64>() * 0.2,
                ]
            })
            .collect(),
    };
    comps.r_y = model_covariance_all(&v, &comps).unwrap();
    let ncm = assemble_ncm(&v, &comps).unwrap();
    let cs = ConstraintSet::new(d, b).unwrap();
    let w_lcmv = lcmv(&ncm, &cs).unwrap();
    let w_lcmp = lcmp(&comps.r_y, &cs, 1e-4).unwrap();
    let mut worst = 0.0f64;
    for k in 0..nbins {
        for s in 0..16 {
            worst = worst.max((w_lcmv.bins[k][s] - w_lcmp.bins[k][s]).norm());
        }
    }
    assert!(worst < 1e-8, "worst per-bin weight difference {worst:.3e}");
    println!(
        "ACCEPTANCE 7: PASS — LCMV and LCMP weights agree within {worst:.2e} \
         under the exact model covariance"
    );
}

#[test]
fn criterion_08_mvdr_identity_wng() {
    let (array, geom, _) = bench_array();
    let d = steering_vector(&array, &geom, Doa::from_degrees(30.0, 0.0));
    let iso = isotropic_pseudocov(&array, &geom);
    let ncm = ncmbeam_core::covariance::NoiseCovariance {
        bins: (0..array.num_bins()).map(|_| identity(16)).collect(),
        epsilon: 1.0,
    };
    let w = mvdr(&ncm, &d, MvdrForm::Standard).unwrap();
    let mut worst = 0.0f64;
    for k in 0..w.num_bins() {
        for s in 0..16 {
            worst = worst.max((w.bins[k][s] - d.bins[k][s] / 16.0).norm());
        }
    }
    assert!(worst < 1e-12, "weight deviation from d/M: {worst:.3e}");
    let (_, wng_db) = theoretical_metrics(&w, &iso);
    assert!(
        (wng_db - 12.04).abs() <= 0.01,
        "broadband WNG {wng_db:.4} dB, expected 12.04 +- 0.01"
    );
    println!("ACCEPTANCE 8: PASS — identity-NCM MVDR gives h = d/M and WNG {wng_db:.3} dB");
}

#[test]
fn criterion_09_enhancement_ordering() {
    let _serial = heavy_guard();
    let start = Instant::now();
    let (array, geom, stft_cfg) = bench_array();
    // Reverberant (diffuse-proxy) subset: 2 * 3 * 3 * 6 = 108 scenes.
    let mut jobs = Vec::new();
    for &t60 in &[500.0, 800.0] {
        for &sir in &SIR_VALUES {
            for &scr in &SCR_VALUES {
                for &thb in &THETA_B_VALUES {
                    jobs.push(scene_config(
                        t60,
                        sir,
                        scr,
                        thb,
                        0x0900_0000
                            + (t60 as u64) * 1000
                            + ((sir + 20.0) as u64) * 100
                            + (scr as u64) * 10
                            + thb as u64,
                    ));
                }
            }
        }
    }
    let results: Vec<(f64, f64, f64, f64)> = jobs
        .par_iter()
        .map(|cfg| {
            let scene = synthesize(cfg, &array, &geom).unwrap();
            let est = estimate_scene(cfg, &array, &geom, &stft_cfg, true);
            let d = steering_vector(&array, &geom, scene.theta_d);
            let b_ncm = steering_vector(&array, &geom, Doa::from_degrees(est.ncm_doa_deg, 0.0));
            let b_music = steering_vector(&array, &geom, Doa::from_degrees(est.msc_deg, 0.0));
            let w_lcmv = lcmv(&est.ncm, &ConstraintSet::new(d.clone(), b_ncm).unwrap()).unwrap();
            let w_lcmp = lcmp(
                &est.comps.r_y,
                &ConstraintSet::new(d.clone(), b_music).unwrap(),
                1e-4,
            )
            .unwrap();
            let reference = array.reference_index();
            let x = scene.desired_direct.clone();
            let p = scene.interferer_direct.clone();
            let n = scene.interferer_full();
            let eta = scene.eta();
            let mut per_method = Vec::new();
            for w in [&w_lcmv, &w_lcmp] {
                let sig = ComponentSignals {
                    x1: reference_component(&x, reference, &stft_cfg).unwrap(),
                    x_f: filter_component(&x, w, &stft_cfg).unwrap(),
                    n1: reference_component(&n, reference, &stft_cfg).unwrap(),
                    n_f: filter_component(&n, w, &stft_cfg).unwrap(),
                    p1: reference_component(&p, reference, &stft_cfg).unwrap(),
                    p_f: filter_component(&p, w, &stft_cfg).unwrap(),
                    eta1: reference_component(&eta, reference, &stft_cfg).unwrap(),
                    eta_f: filter_component(&eta, w, &stft_cfg).unwrap(),
                };
                let m = enhancement_metrics(&sig);
                per_method.push((m.isrf_db, m.dsrf_db));
            }
            (
                per_method[0].0,
                per_method[0].1,
                per_method[1].0,
                per_method[1].1,
            )
        })
        .collect();
    let lcmv_isrf = median(&results.iter().map(|r| r.0).collect::<Vec<_>>());
    let lcmv_dsrf = median(&results.iter().map(|r| r.1).collect::<Vec<_>>());
    let lcmp_isrf = median(&results.iter().map(|r| r.2).collect::<Vec<_>>());
    let lcmp_dsrf = median(&results.iter().map(|r| r.3).collect::<Vec<_>>());
    let elapsed = start.elapsed();
    assert!(
        lcmv_isrf > lcmp_isrf,
        "ISRF ordering violated: LCMV {lcmv_isrf:.2} dB vs LCMP {lcmp_isrf:.2} dB"
    );
    assert!(
        lcmv_dsrf <= lcmp_dsrf,
        "DSRF ordering violated: LCMV {lcmv_dsrf:.2} dB vs LCMP {lcmp_dsrf:.2} dB"
    );
    println!(
        "ACCEPTANCE 9: PASS — 108 reverberant scenes: median ISRF LCMV \
         {lcmv_isrf:.2} dB > LCMP {lcmp_isrf:.2} dB; median DSRF LCMV \
         {lcmv_dsrf:.2} dB <= LCMP {lcmp_dsrf:.2} dB ({elapsed:?})"
    );
}

#[test]
fn criterion_10_stft_roundtrip_and_diffuse_coherence() {
    let _serial = heavy_guard();
    // Round trip at 1e-10 on interior samples.
    let cfg = StftConfig::hamming_half_overlap(128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0010);
    let sig: Vec<f64> = (0..32000).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let frames = stft(&[sig.clone()], &cfg).unwrap();
    let rec = ncmbeam_core::stft::istft(frames.channel(0), &cfg).unwrap();
    let mut worst = 0.0f64;
    for t in ncmbeam_core::stft::interior_range(&cfg, frames.num_frames()) {
        worst = worst.max((rec[t] - sig[t]).abs());
    }
    assert!(worst < 1e-10, "round-trip error {worst:.3e}");

    // Diffuse coherence: 60 s render on the 4x4 array, per-bin normalized
    // covariance vs the sinc model, entrywise within 0.05 for 500 Hz-6 kHz.
    let (array, geom, _) = bench_array();
    let field = diffuse_field(&array, &geom, 60.0, 0xD1FF);
    let iso = isotropic_pseudocov(&array, &geom);
    let m = array.num_sensors();
    // Accumulate the covariance in chunks to bound memory.
    let chunk = 160_000;
    let mut acc: Vec<ncmbeam_core::linalg::CMat> =
        (0..array.num_bins()).map(|_| ncmbeam_core::linalg::CMat::zeros((m, m))).collect();
    let mut total_frames = 0usize;
    let len = field[0].len();
    let mut startpos = 0;
    while startpos + cfg.frame_len <= len {
        let end = (startpos + chunk).min(len);
        let slice: Vec<Vec<f64>> = field.iter().map(|c| c[startpos..end].to_vec()).collect();
        if slice[0].len() < cfg.frame_len {
            break;
        }
        let fr = stft(&slice, &cfg).unwrap();
        let r = sample_covariance(&fr).unwrap();
        let l = fr.num_frames();
        for (a, rk) in acc.iter_mut().zip(r.iter()) {
            a.zip_mut_with(rk, |x, y| *x += y * (l as f64));
        }
        total_frames += l;
        startpos = end;
    }
    assert!(total_frames > 10_000);
    let mut worst_coh = 0.0f64;
    for k in 0..array.num_bins() {
        let f = array.bin_freq(k);
        if !(500.0..=6000.0).contains(&f) {
            continue;
        }
        let r = &acc[k];
        for i in 0..m {
            for j in 0..m {
                let denom = (r[(i, i)].re * r[(j, j)].re).sqrt();
                let coh = r[(i, j)] / denom;
                let want = iso.bins[k][(i, j)];
                worst_coh = worst_coh.max((coh - want).norm());
            }
        }
    }
    assert!(
        worst_coh < 0.05,
        "worst coherence deviation {worst_coh:.4} from the sinc model"
    );
    println!(
        "ACCEPTANCE 10: PASS — interior round-trip error {worst:.2e}; diffuse \
         coherence within {worst_coh:.3} of sinc over 500 Hz-6 kHz"
    );
}
