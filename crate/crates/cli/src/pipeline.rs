//! Pipeline stages over a per-scenario directory:
//!
//! ```text
//! <out>/run_config.json
//! <out>/<idx>_<scenario_id>/
//!     manifest.json          ground truth + achieved ratios
//!     components/*.wav       per-component multichannel audio
//!     mixture.wav
//!     estimates.jsonl        per-iteration trace of the joint estimator
//!     estimate.json          final DoA/convergence summary
//!     music.json             broadband MUSIC estimates (MSC / wMSC)
//!     ncm.{bin,json}         estimated noise covariance (per bin)
//!     ry.{bin,json}          observed sample covariance (per bin)
//!     weights_<method>.{bin,json}
//!     filtered_<method>.wav
//! <out>/metrics.csv
//! ```
//!
//! Every stage reads only persisted intermediates, so a scenario can be
//! re-run from any point. Files are written to a temp name and renamed.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ncmbeam_core::beamform::{lcmp, lcmv, mvdr, BeamformerWeights, ConstraintSet};
use ncmbeam_core::covariance::{sample_covariance, BinCovarianceSet, NoiseCovariance};
use ncmbeam_core::doa::{joint_estimate, DescentConfig, EstimationContext};
use ncmbeam_core::export::{
    read_complex_matrices, write_complex_matrices, write_complex_vectors,
    write_pseudospectrum_csv, write_trace_jsonl,
};
use ncmbeam_core::geometry::{
    directional_pseudocov, isotropic_pseudocov, relative_geometry, steering_vector, Doa,
    PseudoCovKind, RelativeGeometry, SensorArray,
};
use ncmbeam_core::metrics::{
    angular_error_deg, enhancement_metrics, filter_component, reference_component,
    theoretical_metrics, ComponentSignals,
};
use ncmbeam_core::music::{estimate_music_doa, music_spectrum, phasor_average, AverageMethod};
use ncmbeam_core::scenario::{export_scene, import_scene, synthesize, ScenarioConfig};
use ncmbeam_core::stft::{istft, stft, StftConfig};
use ncmbeam_core::wav::{write_multichannel, WavFormat};
use serde::{Deserialize, Serialize};

use crate::config::{GuessPolicy, MethodTag, RunConfig};

pub fn scenario_dir(out: &Path, index: usize, cfg: &ScenarioConfig) -> PathBuf {
    out.join(format!("{index:04}_{}", cfg.scenario_id()))
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Render the scene and persist components + manifest.
pub fn stage_simulate(run: &RunConfig, scen: &ScenarioConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let geom = relative_geometry(&run.array)?;
    let scene = synthesize(scen, &run.array, &geom)?;
    export_scene(dir, scen, &scene, run.array.f0 as u32)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub converged: bool,
    pub low_confidence: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MusicSummary {
    pub msc_deg: f64,
    pub wmsc_deg: f64,
    pub valid_bins: usize,
}

struct SceneData {
    scene: ncmbeam_core::scenario::ScenarioSignals,
    manifest: ncmbeam_core::scenario::ScenarioManifest,
    comps: BinCovarianceSet,
    geom: RelativeGeometry,
    stft_cfg: StftConfig,
}

fn load_scene(run: &RunConfig, dir: &Path) -> Result<SceneData> {
    let (manifest, scene) = import_scene(dir, run.array.f0 as u32)?;
    let geom = relative_geometry(&run.array)?;
    let stft_cfg = StftConfig::hamming_half_overlap(run.stft_frame_len)?;
    let frames = stft(&scene.mixture(), &stft_cfg)?;
    let r_y = sample_covariance(&frames)?;
    let d = steering_vector(&run.array, &geom, scene.theta_d);
    // The interferer slot is a placeholder; estimation rebuilds it from
    // each DoA under test.
    let placeholder = steering_vector(&run.array, &geom, Doa::from_degrees(90.0, 0.0));
    let comps = BinCovarianceSet {
        r_y,
        desired: directional_pseudocov(&d, PseudoCovKind::Desired),
        interferer: directional_pseudocov(&placeholder, PseudoCovKind::Interferer),
        isotropic: isotropic_pseudocov(&run.array, &geom),
        white: white(&run.array),
        epsilon: run.epsilon,
    };
    Ok(SceneData {
        scene,
        manifest,
        comps,
        geom,
        stft_cfg,
    })
}

fn white(array: &SensorArray) -> ncmbeam_core::geometry::PseudoCovariance {
    ncmbeam_core::geometry::white_pseudocov(array.num_sensors(), array.num_bins())
}

fn descent_config(run: &RunConfig, scen: &ScenarioConfig) -> DescentConfig {
    use rand::prelude::*;
    let initial = match run.estimator.guess {
        GuessPolicy::Fixed { azimuth_deg } => Doa::from_degrees(azimuth_deg, 0.0),
        GuessPolicy::MultiStart => Doa::from_degrees(0.0, 0.0),
        GuessPolicy::OffsetFromTruth { min_deg, max_deg } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(scen.seed ^ 0x1717);
            let off = min_deg + rng.random::<f64>() * (max_deg - min_deg).max(0.0);
            let sgn = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Doa::from_degrees(scen.theta_b_deg + sgn * off, 0.0)
        }
    };
    let mut cfg = DescentConfig::new(initial);
    cfg.form = run.estimator.form;
    cfg.azimuth_only = run.estimator.azimuth_only;
    cfg.step = run.estimator.step_rad;
    cfg.backtrack = run.estimator.backtrack;
    cfg.tol_grad = run.estimator.tol_grad;
    cfg.max_iters = run.estimator.max_iters;
    cfg.max_outer = run.estimator.max_outer;
    cfg.exclusion = run.estimator.exclusion_deg.to_radians();
    if matches!(run.estimator.guess, GuessPolicy::MultiStart) {
        cfg = cfg.with_eight_starts();
    }
    cfg
}

/// Joint DoA + NCM estimation from persisted components; writes the trace,
/// the summary and the covariance dumps.
pub fn stage_estimate(
    run: &RunConfig,
    dir: &Path,
    dump_spectra: bool,
    dump_solver: bool,
) -> Result<EstimateSummary> {
    let data = load_scene(run, dir)?;
    let scen = &data.manifest.config;
    let ctx = EstimationContext::new(&run.array, &data.geom, &data.comps, data.scene.theta_d);
    let cfg = descent_config(run, scen);
    let est = joint_estimate(&ctx, &cfg)?;

    if dump_solver {
        // Per-bin normal systems and active-set states at the final DoA.
        use ncmbeam_core::export::{write_solver_dump, SolverDump};
        use ncmbeam_core::solver::{build_system, solve_nonnegative};
        let sv = steering_vector(&run.array, &data.geom, est.doa);
        let mut work = data.comps.clone();
        work.set_interferer(directional_pseudocov(&sv, PseudoCovKind::Interferer));
        let mut systems = Vec::new();
        let mut states = Vec::new();
        for k in ctx.bin_range.clone() {
            let sys = build_system(&work, k);
            let state = solve_nonnegative(&sys)?;
            systems.push(sys);
            states.push(state);
        }
        let rows: Vec<SolverDump<'_>> = systems
            .iter()
            .zip(states.iter())
            .map(|(system, state)| SolverDump {
                bin: system.bin,
                system,
                state,
            })
            .collect();
        write_solver_dump(&dir.join("solver_dump.jsonl"), &rows)?;
    }

    write_trace_jsonl(&dir.join("estimates.jsonl"), &est.trace)?;
    write_complex_matrices(&dir.join("ncm"), &est.ncm.bins, "noise_covariance")?;
    write_complex_matrices(&dir.join("ry"), &data.comps.r_y, "observed_covariance")?;
    let summary = EstimateSummary {
        theta_deg: est.doa.azimuth.to_degrees(),
        phi_deg: est.doa.elevation.to_degrees(),
        converged: est.converged,
        low_confidence: est.low_confidence,
        iterations: est.iterations,
        grad_norm: est.grad_norm,
        cost: est.cost,
    };
    atomic_write(
        &dir.join("estimate.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;

    if dump_spectra {
        let mcfg = run.music.to_config();
        let spectra: Vec<_> = (0..data.comps.num_bins())
            .filter(|&k| run.array.bin_freq(k) >= mcfg.min_freq_hz)
            .map(|k| music_spectrum(&data.comps.r_y[k], &run.array, &data.geom, k, &mcfg))
            .collect::<ncmbeam_core::Result<_>>()?;
        write_pseudospectrum_csv(&dir.join("pseudospectra.csv"), &spectra)?;
    }
    Ok(summary)
}

/// Broadband MUSIC baselines from the persisted covariance.
pub fn stage_music(run: &RunConfig, dir: &Path) -> Result<MusicSummary> {
    let data = load_scene(run, dir)?;
    let mcfg = run.music.to_config();
    let est = estimate_music_doa(
        &data.comps.r_y,
        &run.array,
        &data.geom,
        data.scene.theta_d,
        &mcfg,
        AverageMethod::Msc,
    )?;
    let wmsc = phasor_average(&est.per_bin, AverageMethod::WMsc)?;
    let summary = MusicSummary {
        msc_deg: est.theta.to_degrees(),
        wmsc_deg: wmsc.to_degrees(),
        valid_bins: est.per_bin.iter().flatten().count(),
    };
    atomic_write(
        &dir.join("music.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    Ok(summary)
}

fn read_estimate(dir: &Path) -> Result<EstimateSummary> {
    let text = std::fs::read_to_string(dir.join("estimate.json"))
        .context("estimate.json missing; run the estimate stage first")?;
    Ok(serde_json::from_str(&text)?)
}

fn read_music(dir: &Path) -> Result<MusicSummary> {
    let text = std::fs::read_to_string(dir.join("music.json"))
        .context("music.json missing; run the estimate stage first")?;
    Ok(serde_json::from_str(&text)?)
}

/// One metrics.csv row. Blank fields mean not-applicable (DoA-only methods).
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub scenario_id: String,
    pub method: &'static str,
    pub t60_ms: f64,
    pub d_x_m: f64,
    pub d_p_m: f64,
    pub sir_db: f64,
    pub scr_db: f64,
    pub theta_b_deg: f64,
    pub seed: u64,
    pub theta_est_deg: f64,
    pub angle_err_deg: f64,
    pub gsnr_db: Option<f64>,
    pub gsir_db: Option<f64>,
    pub isrf_db: Option<f64>,
    pub dsrf_db: Option<f64>,
    pub df_db: Option<f64>,
    pub wng_db: Option<f64>,
    pub clipped: bool,
}

pub const METRICS_HEADER: &str = "scenario_id,method,t60_ms,d_x_m,d_p_m,sir_db,scr_db,theta_b_deg,seed,theta_est_deg,angle_err_deg,gsnr_db,gsir_db,isrf_db,dsrf_db,df_db,wng_db,clipped";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{},{},{},{},{},{},{}",
            self.scenario_id,
            self.method,
            self.t60_ms,
            self.d_x_m,
            self.d_p_m,
            self.sir_db,
            self.scr_db,
            self.theta_b_deg,
            self.seed,
            self.theta_est_deg,
            self.angle_err_deg,
            fmt_opt(self.gsnr_db),
            fmt_opt(self.gsir_db),
            fmt_opt(self.isrf_db),
            fmt_opt(self.dsrf_db),
            fmt_opt(self.df_db),
            fmt_opt(self.wng_db),
            self.clipped,
        )
    }
}

/// Compute weights for one method, persist them and the filtered output,
/// and return the metrics row.
pub fn stage_beamform(run: &RunConfig, dir: &Path, method: MethodTag) -> Result<MetricsRow> {
    let data = load_scene(run, dir)?;
    let scen = &data.manifest.config;
    let truth = data.scene.theta_b;
    let reference = run.array.reference_index();
    let d = steering_vector(&run.array, &data.geom, data.scene.theta_d);

    let (theta_est_deg, weights): (f64, Option<BeamformerWeights>) = match method {
        MethodTag::Msc => (read_music(dir)?.msc_deg, None),
        MethodTag::WMsc => (read_music(dir)?.wmsc_deg, None),
        MethodTag::NcmLcmv => {
            let est = read_estimate(dir)?;
            let (_, ncm_bins) = read_complex_matrices(&dir.join("ncm"))?;
            let ncm = NoiseCovariance {
                bins: ncm_bins,
                epsilon: run.epsilon,
            };
            let b = steering_vector(
                &run.array,
                &data.geom,
                Doa::from_degrees(est.theta_deg, est.phi_deg),
            );
            let w = lcmv(&ncm, &ConstraintSet::new(d.clone(), b)?)?;
            (est.theta_deg, Some(w))
        }
        MethodTag::NcmMvdr => {
            let est = read_estimate(dir)?;
            let (_, ncm_bins) = read_complex_matrices(&dir.join("ncm"))?;
            let ncm = NoiseCovariance {
                bins: ncm_bins,
                epsilon: run.epsilon,
            };
            let w = mvdr(&ncm, &d, run.mvdr_form)?;
            (est.theta_deg, Some(w))
        }
        MethodTag::MusicLcmp => {
            let music = read_music(dir)?;
            let b = steering_vector(
                &run.array,
                &data.geom,
                Doa::from_degrees(music.msc_deg, 0.0),
            );
            let w = lcmp(
                &data.comps.r_y,
                &ConstraintSet::new(d.clone(), b)?,
                run.epsilon,
            )?;
            (music.msc_deg, Some(w))
        }
    };

    let angle_err_deg = angular_error_deg(Doa::from_degrees(theta_est_deg, 0.0), truth);
    let mut row = MetricsRow {
        scenario_id: scen.scenario_id(),
        method: method.as_str(),
        t60_ms: scen.t60_ms,
        d_x_m: scen.d_x_m,
        d_p_m: scen.d_p_m,
        sir_db: scen.sir_db,
        scr_db: scen.scr_db,
        theta_b_deg: scen.theta_b_deg,
        seed: scen.seed,
        theta_est_deg,
        angle_err_deg,
        gsnr_db: None,
        gsir_db: None,
        isrf_db: None,
        dsrf_db: None,
        df_db: None,
        wng_db: None,
        clipped: false,
    };

    let Some(w) = weights else {
        return Ok(row);
    };

    write_complex_vectors(
        &dir.join(format!("weights_{}", method.as_str())),
        &w.bins,
        method.as_str(),
    )?;

    let stft_cfg = &data.stft_cfg;
    let mix = data.scene.mixture();
    let filtered = {
        let frames = stft(&mix, stft_cfg)?;
        let out = ncmbeam_core::stft::apply_weights(&frames, &w.bins)?;
        istft(out.view(), stft_cfg)?
    };
    write_multichannel(
        &dir.join(format!("filtered_{}.wav", method.as_str())),
        &[filtered],
        run.array.f0 as u32,
        WavFormat::Float32,
    )?;

    let x = &data.scene.desired_direct;
    let p = &data.scene.interferer_direct;
    let n = data.scene.interferer_full();
    let eta = data.scene.eta();
    let sig = ComponentSignals {
        x1: reference_component(x, reference, stft_cfg)?,
        x_f: filter_component(x, &w, stft_cfg)?,
        n1: reference_component(&n, reference, stft_cfg)?,
        n_f: filter_component(&n, &w, stft_cfg)?,
        p1: reference_component(p, reference, stft_cfg)?,
        p_f: filter_component(p, &w, stft_cfg)?,
        eta1: reference_component(&eta, reference, stft_cfg)?,
        eta_f: filter_component(&eta, &w, stft_cfg)?,
    };
    let m = enhancement_metrics(&sig);
    let iso = isotropic_pseudocov(&run.array, &data.geom);
    let (df_db, wng_db) = theoretical_metrics(&w, &iso);
    row.gsnr_db = Some(m.gsnr_db);
    row.gsir_db = Some(m.gsir_db);
    row.isrf_db = Some(m.isrf_db);
    row.dsrf_db = Some(m.dsrf_db);
    row.df_db = Some(df_db);
    row.wng_db = Some(wng_db);
    row.clipped = m.clipped;
    Ok(row)
}

/// Full pipeline for one scenario; returns its metric rows in method order.
pub fn run_scenario(
    run: &RunConfig,
    scen: &ScenarioConfig,
    dir: &Path,
) -> Result<Vec<MetricsRow>> {
    stage_simulate(run, scen, dir)
        .with_context(|| format!("simulate stage failed for {}", scen.scenario_id()))?;
    if run.methods.iter().any(|m| m.needs_ncm_estimate()) {
        stage_estimate(run, dir, false, false)
            .with_context(|| format!("estimate stage failed for {}", scen.scenario_id()))?;
    }
    if run.methods.iter().any(|m| m.needs_music()) {
        stage_music(run, dir)
            .with_context(|| format!("music stage failed for {}", scen.scenario_id()))?;
    }
    let mut rows = Vec::new();
    for &method in &run.methods {
        let row = stage_beamform(run, dir, method).with_context(|| {
            format!(
                "beamform stage ({}) failed for {}",
                method.as_str(),
                scen.scenario_id()
            )
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Sweep a grid: per-scenario pipelines (parallel across scenarios), then
/// a combined metrics.csv in deterministic grid order.
pub fn run_sweep(run: &RunConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    atomic_write(
        &out.join("run_config.json"),
        serde_json::to_string_pretty(run)?.as_bytes(),
    )?;
    let grid = run.grid().map_err(|e| anyhow!("{e}"))?;
    if grid.is_empty() {
        bail!("empty scenario grid");
    }
    use rayon::prelude::*;
    let results: Vec<Result<Vec<MetricsRow>>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, scen)| run_scenario(run, scen, &scenario_dir(out, i, scen)))
        .collect();
    let mut lines = vec![METRICS_HEADER.to_string()];
    for res in results {
        for row in res? {
            lines.push(row.to_csv_line());
        }
    }
    atomic_write(&out.join("metrics.csv"), (lines.join("\n") + "\n").as_bytes())?;
    Ok(())
}
