//! Run configuration: a single versioned JSON document.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ncmbeam_core::doa::GradientForm;
use ncmbeam_core::geometry::SensorArray;
use ncmbeam_core::scenario::{table1_full, table1_mini, table1_reduced, ScenarioConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    NcmLcmv,
    NcmMvdr,
    MusicLcmp,
    Msc,
    #[serde(rename = "wmsc")]
    WMsc,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::NcmLcmv => "ncm-lcmv",
            MethodTag::NcmMvdr => "ncm-mvdr",
            MethodTag::MusicLcmp => "music-lcmp",
            MethodTag::Msc => "msc",
            MethodTag::WMsc => "wmsc",
        }
    }

    pub fn needs_ncm_estimate(&self) -> bool {
        matches!(self, MethodTag::NcmLcmv | MethodTag::NcmMvdr)
    }

    pub fn needs_music(&self) -> bool {
        matches!(self, MethodTag::MusicLcmp | MethodTag::Msc | MethodTag::WMsc)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum GuessPolicy {
    /// Start 10-15 degrees from the true interferer azimuth (simulation
    /// protocol: a plausible prior estimate).
    OffsetFromTruth { min_deg: f64, max_deg: f64 },
    /// Eight equally spaced azimuth starts.
    MultiStart,
    /// Fixed starting azimuth in degrees.
    Fixed { azimuth_deg: f64 },
}

impl Default for GuessPolicy {
    fn default() -> Self {
        GuessPolicy::OffsetFromTruth {
            min_deg: 10.0,
            max_deg: 15.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorSettings {
    pub form: GradientForm,
    pub azimuth_only: bool,
    pub step_rad: f64,
    pub backtrack: f64,
    pub tol_grad: f64,
    pub max_iters: usize,
    pub max_outer: usize,
    pub exclusion_deg: f64,
    pub guess: GuessPolicy,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            form: GradientForm::Planar,
            azimuth_only: true,
            step_rad: 0.05,
            backtrack: 0.5,
            tol_grad: 1e-6,
            max_iters: 300,
            max_outer: 50,
            exclusion_deg: 5.0,
            guess: GuessPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MusicSettings {
    pub grid_step_deg: f64,
    pub source_count: usize,
    pub min_freq_hz: f64,
    pub separation_deg: f64,
}

impl Default for MusicSettings {
    fn default() -> Self {
        Self {
            grid_step_deg: 1.0,
            source_count: 2,
            min_freq_hz: 100.0,
            separation_deg: 5.0,
        }
    }
}

impl MusicSettings {
    pub fn to_config(&self) -> ncmbeam_core::music::MusicConfig {
        ncmbeam_core::music::MusicConfig {
            grid_step_deg: self.grid_step_deg,
            source_count: self.source_count,
            min_freq_hz: self.min_freq_hz,
            separation: self.separation_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum ScenarioSpec {
    Preset { preset: String },
    Explicit { scenarios: Vec<ScenarioConfig> },
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec::Preset {
            preset: "table1-mini".into(),
        }
    }
}

fn default_array() -> SensorArray {
    SensorArray::ura(4, 4, 0.02, 16000.0, 128).expect("default array")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: u32,
    /// Inline array geometry; `array_path` overrides it when given.
    #[serde(default = "default_array")]
    pub array: SensorArray,
    #[serde(default)]
    pub array_path: Option<String>,
    #[serde(default = "default_frame_len")]
    pub stft_frame_len: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    #[serde(default)]
    pub music: MusicSettings,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodTag>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub scenarios: ScenarioSpec,
    #[serde(default)]
    pub mvdr_form: ncmbeam_core::beamform::MvdrForm,
}

fn default_frame_len() -> usize {
    128
}

fn default_epsilon() -> f64 {
    1e-4
}

fn default_duration() -> f64 {
    1.5
}

fn default_methods() -> Vec<MethodTag> {
    vec![
        MethodTag::NcmLcmv,
        MethodTag::NcmMvdr,
        MethodTag::MusicLcmp,
        MethodTag::Msc,
        MethodTag::WMsc,
    ]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            array: default_array(),
            array_path: None,
            stft_frame_len: default_frame_len(),
            epsilon: default_epsilon(),
            estimator: EstimatorSettings::default(),
            music: MusicSettings::default(),
            methods: default_methods(),
            master_seed: 0,
            duration_s: default_duration(),
            scenarios: ScenarioSpec::default(),
            mvdr_form: Default::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.resolve(path.parent())?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: Option<&Path>) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            bail!(
                "unsupported config schema version {} (expected {})",
                self.version,
                SCHEMA_VERSION
            );
        }
        if let Some(rel) = &self.array_path {
            let path = match base {
                Some(b) => b.join(rel),
                None => rel.into(),
            };
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading array geometry {}", path.display()))?;
            self.array = serde_json::from_str(&text)
                .with_context(|| format!("parsing array geometry {}", path.display()))?;
        }
        if self.methods.is_empty() {
            bail!("at least one method must be selected");
        }
        if self.stft_frame_len != self.array.bins {
            bail!(
                "stft frame length {} must match the array's bin count (FFT order) {}",
                self.stft_frame_len,
                self.array.bins
            );
        }
        if !(self.duration_s > 0.0) {
            bail!("duration must be positive");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Vec<ScenarioConfig>> {
        match &self.scenarios {
            ScenarioSpec::Explicit { scenarios } => Ok(scenarios.clone()),
            ScenarioSpec::Preset { preset } => self.preset_grid(preset),
        }
    }

    pub fn preset_grid(&self, preset: &str) -> Result<Vec<ScenarioConfig>> {
        match preset {
            "table1-full" => Ok(table1_full(self.master_seed, self.duration_s)),
            "table1-reduced" => Ok(table1_reduced(self.master_seed, self.duration_s)),
            "table1-mini" => Ok(table1_mini(self.master_seed, self.duration_s)),
            other => bail!("unknown preset {other:?} (table1-full, table1-reduced, table1-mini)"),
        }
    }
}
