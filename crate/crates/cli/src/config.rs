//! JSON run configurations, one per subcommand. Relative paths inside a
//! config resolve against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use fracvisc::calibration::{Bound, DEFAULT_WEIGHT};
use fracvisc::dataio::model_from_json;
use fracvisc::grid::GridSpec;
use fracvisc::lsa::{LogMeasure, Output, Tau2Mode, UniformRange, DEFAULT_REL_STD};
use fracvisc::presets;
use fracvisc::pso::PsoConfig;
use fracvisc::viscomodel::{Denominator, FractionalModel, ModelKind};

use crate::error::{CliError, Result};

/// Where the model parameters come from.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    /// A bundled fitted row, e.g. `{"preset": "40HS/0.0"}`.
    Preset {
        preset: String,
        /// Recompute `tau_c2` from the time-scale constraint.
        #[serde(default)]
        constrained: bool,
    },
    /// A parameter JSON file.
    File { file: PathBuf },
    Inline(FractionalModel),
}

impl ModelSource {
    pub fn resolve(&self, base: &Path) -> Result<FractionalModel> {
        match self {
            ModelSource::Preset { preset, constrained } => {
                let row = presets::find(preset).ok_or_else(|| {
                    let known: Vec<String> = presets::FMM_FMG_FITS.iter().map(|r| r.label()).collect();
                    CliError::Config(format!("unknown preset `{preset}`; known: {}", known.join(", ")))
                })?;
                Ok(if *constrained {
                    row.constrained_model()?
                } else {
                    row.model()?
                })
            }
            ModelSource::File { file } => {
                let path = base.join(file);
                let text = fs::read_to_string(&path).map_err(|e| CliError::read(&path, e))?;
                Ok(model_from_json(&text)?)
            }
            ModelSource::Inline(m) => {
                m.validate()?;
                Ok(*m)
            }
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_weight() -> f64 {
    DEFAULT_WEIGHT
}

fn default_rel_std() -> f64 {
    DEFAULT_REL_STD
}

fn default_outputs() -> Vec<Output> {
    Output::ALL.to_vec()
}

fn default_mc_samples() -> usize {
    2000
}

fn default_sobol_n() -> usize {
    1 << 14
}

fn default_fmm_fmg() -> ModelKind {
    ModelKind::FmmFmg
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Master curve CSV.
    pub data: PathBuf,
    #[serde(default = "default_fmm_fmg")]
    pub kind: ModelKind,
    #[serde(default = "default_true")]
    pub constrain_tau2: bool,
    /// Search box; the standard one when absent.
    pub bounds: Option<Vec<Bound>>,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default = "default_weight")]
    pub w1: f64,
    #[serde(default = "default_weight")]
    pub w2: f64,
    #[serde(default)]
    pub denominator: Denominator,
    #[serde(default = "default_true")]
    pub log_time_scales: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsaConfig {
    pub model: ModelSource,
    /// Overrides the model's denominator form.
    pub denominator: Option<Denominator>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    #[serde(default = "default_rel_std")]
    pub rel_std: f64,
    /// Explicit ranges; derived from `rel_std` when absent.
    pub ranges: Option<Vec<UniformRange>>,
    /// Average over random parameter draws; `false` gives the baseline
    /// indices only.
    #[serde(default = "default_true")]
    pub monte_carlo: bool,
    #[serde(default = "default_mc_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub tau2: Tau2Mode,
    #[serde(default)]
    pub measure: LogMeasure,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsaConfig {
    pub model: ModelSource,
    pub denominator: Option<Denominator>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    #[serde(default = "default_rel_std")]
    pub rel_std: f64,
    pub ranges: Option<Vec<UniformRange>>,
    /// Base sample size; powers of two balance the Sobol' points best.
    #[serde(default = "default_sobol_n")]
    pub n: usize,
    /// Scramble the Sobol' points with the run seed.
    #[serde(default)]
    pub scramble: bool,
    #[serde(default)]
    pub tau2: Tau2Mode,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub model: ModelSource,
    pub denominator: Option<Denominator>,
    #[serde(default)]
    pub grid: GridSpec,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub model: ModelSource,
    pub denominator: Option<Denominator>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub noise_sigma_log10: f64,
    #[serde(default)]
    pub seed: u64,
    pub label: Option<String>,
    pub out: Option<PathBuf>,
}

/// Reads and parses a config file. Returns it with its directory.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<(T, PathBuf)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let cfg = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// Applies an optional denominator override to a resolved model.
pub fn with_form(m: FractionalModel, form: Option<Denominator>) -> FractionalModel {
    match form {
        Some(f) => m.with_denominator(f),
        None => m,
    }
}
