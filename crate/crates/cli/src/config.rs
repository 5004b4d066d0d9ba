use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use evc_core::cwt::WaveletConfig;
use evc_core::io::read_json;
use evc_core::vawgan::{CondDims, F0Condition, F0Stats, LossWeights, NetworkSpec, TrainConfig};

use crate::error::{CliError, CliResult};

pub const PRESETS: [&str; 2] = ["dense", "full_scale"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Corpus manifest used by `train` and `convert`.
    pub features: Option<PathBuf>,
    /// Directory of F0 files for `f0prep`.
    pub f0: Option<PathBuf>,
    /// Root holding `spectrum/` and `prosody/` model directories.
    pub models: Option<PathBuf>,
    /// Directory for `eval` reports.
    pub reports: Option<PathBuf>,
}

/// Settings shared by all subcommands, read from `--config`. Command-line
/// flags take precedence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub wavelet: Option<WaveletConfig>,
    pub preset: String,
    /// Hidden width and latent size of the dense preset.
    pub hidden: usize,
    pub latent: usize,
    pub weights: LossWeights,
    pub optimizer: TrainConfig,
    pub seed: Option<u64>,
    pub f0_condition: F0Condition,
    pub f0_stats: F0Stats,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            wavelet: None,
            preset: "dense".into(),
            hidden: 64,
            latent: 16,
            weights: LossWeights::default(),
            optimizer: TrainConfig::default(),
            seed: None,
            f0_condition: F0Condition::default(),
            f0_stats: F0Stats::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let cfg: Self = match path {
            Some(p) => read_json(p).map_err(|e| CliError::config(format!("ConfigError: {e}")))?,
            None => Self::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let p = &self.paths;
        let given: Vec<&PathBuf> = [&p.features, &p.f0, &p.models, &p.reports].into_iter().flatten().collect();
        for (i, a) in given.iter().enumerate() {
            if given[i + 1..].contains(a) {
                return Err(CliError::config(format!(
                    "ConfigError: path {} is used for more than one role",
                    a.display()
                )));
            }
        }
        resolve_preset(&self.preset)?;
        if let Some(w) = &self.wavelet {
            w.validate()?;
        }
        Ok(())
    }

    /// Builds the network for `input_dim` inputs and the given conditions.
    pub fn network(&self, preset: &str, input_dim: usize, cond: CondDims) -> CliResult<NetworkSpec> {
        Ok(match resolve_preset(preset)? {
            "dense" => NetworkSpec::dense(input_dim, self.hidden, self.latent, cond),
            _ => NetworkSpec::full_scale(cond),
        })
    }
}

pub fn resolve_preset(name: &str) -> CliResult<&'static str> {
    let canon = name.replace('-', "_");
    PRESETS.into_iter().find(|p| *p == canon).ok_or_else(|| {
        CliError::config(format!(
            "ConfigError: unknown preset {name:?}, expected one of {}",
            PRESETS.join(", ")
        ))
    })
}
