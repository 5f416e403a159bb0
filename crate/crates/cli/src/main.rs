//! Command-line harness: simulate scenes, estimate DoA + noise covariance,
//! beamform, and aggregate sweep statistics.
//!
//! Exit codes: 0 success, 1 configuration error, 2 stage failure.

mod config;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{MethodTag, RunConfig, ScenarioSpec};

#[derive(Parser)]
#[command(
    name = "ncmbeam",
    about = "Joint DoA + noise-covariance estimation and beamforming on synthetic scenes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the configured scenario grid to per-scenario directories.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Joint DoA + NCM estimation (plus MUSIC baselines) from a persisted
    /// scenario directory.
    Estimate {
        #[arg(long)]
        scenario: PathBuf,
        /// Run configuration; defaults to <scenario>/../run_config.json.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also dump per-bin MUSIC pseudospectra as CSV.
        #[arg(long)]
        dump_pseudospectra: bool,
        /// Also dump the per-bin normal systems and active-set states as
        /// JSON lines (cross-implementation checking).
        #[arg(long)]
        dump_solver: bool,
    },
    /// Compute weights, filtered audio and metrics for one method.
    Beamform {
        #[arg(long)]
        scenario: PathBuf,
        /// ncm-lcmv | ncm-mvdr | music-lcmp | msc | wmsc
        #[arg(long)]
        method: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Aggregate metrics.csv into boxplot statistics per parameter value.
    Report {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        group_by: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline over a preset grid.
    Sweep {
        /// table1-full | table1-reduced | table1-mini
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(explicit: Option<&PathBuf>, scenario: Option<&PathBuf>) -> Result<RunConfig> {
    if let Some(path) = explicit {
        return RunConfig::load(path);
    }
    if let Some(dir) = scenario {
        let implied = dir
            .parent()
            .map(|p| p.join("run_config.json"))
            .filter(|p| p.exists());
        if let Some(path) = implied {
            return RunConfig::load(&path);
        }
    }
    let mut cfg = RunConfig::default();
    cfg.resolve(None)?;
    Ok(cfg)
}

fn worker_pool() -> Result<()> {
    if let Ok(n) = std::env::var("NCMBEAM_WORKERS") {
        let workers: usize = n
            .parse()
            .with_context(|| format!("NCMBEAM_WORKERS={n} is not a number"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global()
            .context("thread pool")?;
    }
    Ok(())
}

/// Errors before any stage runs are configuration errors (exit 1); errors
/// inside a stage are stage failures (exit 2).
fn run(cli: Cli) -> Result<(), (u8, anyhow::Error)> {
    let conf = |e: anyhow::Error| (1u8, e);
    let stage = |e: anyhow::Error| (2u8, e);
    worker_pool().map_err(conf)?;
    match cli.command {
        Command::Simulate { config, out } => {
            let run_cfg = RunConfig::load(&config).map_err(conf)?;
            let grid = run_cfg.grid().map_err(conf)?;
            std::fs::create_dir_all(&out)
                .context("creating output directory")
                .map_err(conf)?;
            std::fs::write(
                out.join("run_config.json"),
                serde_json::to_string_pretty(&run_cfg)
                    .context("serializing config")
                    .map_err(conf)?,
            )
            .context("writing run_config.json")
            .map_err(conf)?;
            for (i, scen) in grid.iter().enumerate() {
                let dir = pipeline::scenario_dir(&out, i, scen);
                pipeline::stage_simulate(&run_cfg, scen, &dir)
                    .with_context(|| format!("scenario {}", scen.scenario_id()))
                    .map_err(stage)?;
            }
            println!("simulated {} scenarios into {}", grid.len(), out.display());
        }
        Command::Estimate {
            scenario,
            config,
            dump_pseudospectra,
            dump_solver,
        } => {
            let run_cfg = load_config(config.as_ref(), Some(&scenario)).map_err(conf)?;
            let summary =
                pipeline::stage_estimate(&run_cfg, &scenario, dump_pseudospectra, dump_solver)
                    .map_err(stage)?;
            pipeline::stage_music(&run_cfg, &scenario).map_err(stage)?;
            println!(
                "estimated interferer azimuth {:.3} deg (converged: {}, {} outer iterations)",
                summary.theta_deg, summary.converged, summary.iterations
            );
        }
        Command::Beamform {
            scenario,
            method,
            config,
        } => {
            let run_cfg = load_config(config.as_ref(), Some(&scenario)).map_err(conf)?;
            let tag = parse_method(&method).map_err(conf)?;
            let row = pipeline::stage_beamform(&run_cfg, &scenario, tag).map_err(stage)?;
            println!("{}", pipeline::METRICS_HEADER);
            println!("{}", row.to_csv_line());
        }
        Command::Report {
            metrics,
            group_by,
            out,
        } => {
            let rendered = report::report(&metrics, &group_by, out.as_deref()).map_err(conf)?;
            if out.is_none() {
                print!("{rendered}");
            }
        }
        Command::Sweep {
            preset,
            out,
            seed,
            config,
        } => {
            let mut run_cfg = load_config(config.as_ref(), None).map_err(conf)?;
            if let Some(s) = seed {
                run_cfg.master_seed = s;
            }
            run_cfg.scenarios = ScenarioSpec::Preset {
                preset: preset.clone(),
            };
            run_cfg.grid().map_err(conf)?; // validate the preset name early
            pipeline::run_sweep(&run_cfg, &out).map_err(stage)?;
            println!("sweep {preset} complete: {}", out.join("metrics.csv").display());
        }
    }
    Ok(())
}

fn parse_method(name: &str) -> Result<MethodTag> {
    Ok(match name {
        "ncm-lcmv" => MethodTag::NcmLcmv,
        "ncm-mvdr" => MethodTag::NcmMvdr,
        "music-lcmp" => MethodTag::MusicLcmp,
        "msc" => MethodTag::Msc,
        "wmsc" => MethodTag::WMsc,
        other => anyhow::bail!(
            "unknown method {other:?} (ncm-lcmv, ncm-mvdr, music-lcmp, msc, wmsc)"
        ),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
