use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::f0prep::NormStats;
use crate::io::{read_features, read_json, write_features, write_json, FeatureSequence};

use super::convert::{F0Condition, ProsodyModel, SpectrumModel};
use super::network::Params;
use super::objective::LossWeights;
use super::train::{EpochLosses, ProsodyPrep, TrainConfig, VawGan};
use super::{NetworkSpec, VawganError};

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Spectrum,
    Prosody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Spectrum(SpectrumModel),
    Prosody(ProsodyModel),
}

impl SavedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            SavedModel::Spectrum(_) => ModelKind::Spectrum,
            SavedModel::Prosody(_) => ModelKind::Prosody,
        }
    }

    pub fn gan(&self) -> &VawGan {
        match self {
            SavedModel::Spectrum(m) => &m.gan,
            SavedModel::Prosody(m) => &m.gan,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    file: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    kind: ModelKind,
    spec: NetworkSpec,
    weights: LossWeights,
    optimizer: TrainConfig,
    seed: u64,
    history: Vec<EpochLosses>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f0_stats: Option<NormStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f0_condition: Option<F0Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prosody: Option<ProsodyPrep>,
    encoder: Vec<ParamEntry>,
    decoder: Vec<ParamEntry>,
    critic: Vec<ParamEntry>,
}

/// Parameter matrices are stored as EVCF files with `shape[0]` frames; 1-D
/// tensors are a single frame.
fn save_params(dir: &Path, stack: &str, params: &Params) -> Result<Vec<ParamEntry>, VawganError> {
    params
        .tensors
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let file = format!("{stack}_{i:02}.evcf");
            let rows = if t.shape().len() > 1 { t.shape()[0] } else { 1 };
            let seq = FeatureSequence::new(t.data().to_vec(), rows, t.len() / rows, 1.0)?;
            write_features(&dir.join(&file), &seq)?;
            Ok(ParamEntry {
                file,
                shape: t.shape().to_vec(),
            })
        })
        .collect()
}

fn load_params(dir: &Path, entries: &[ParamEntry]) -> Result<Params, VawganError> {
    let tensors = entries
        .iter()
        .map(|e| {
            let seq: FeatureSequence = read_features(&dir.join(&e.file))?;
            Tensor::new(e.shape.clone(), seq.into_data())
                .map_err(|err| VawganError::Shape(format!("{}: {err}", e.file)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Params { tensors })
}

fn check_params(what: &str, params: &Params, fresh: &Params) -> Result<(), VawganError> {
    let shapes = |p: &Params| p.tensors.iter().map(|t| t.shape().to_vec()).collect::<Vec<_>>();
    if shapes(params) != shapes(fresh) {
        return Err(VawganError::Shape(format!("{what} parameters do not match the network spec")));
    }
    Ok(())
}

/// Writes `manifest.json` and one EVCF file per parameter tensor into `dir`.
pub fn save_model(dir: &Path, model: &SavedModel) -> Result<(), VawganError> {
    std::fs::create_dir_all(dir).map_err(|source| crate::io::IoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let gan = model.gan();
    let (f0_stats, f0_condition, prosody) = match model {
        SavedModel::Spectrum(m) => (Some(m.f0_stats), Some(m.f0_condition), None),
        SavedModel::Prosody(m) => (None, None, Some(m.prep.clone())),
    };
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kind: model.kind(),
        spec: gan.spec.clone(),
        weights: gan.weights,
        optimizer: gan.config,
        seed: gan.config.seed,
        history: gan.history.clone(),
        f0_stats,
        f0_condition,
        prosody,
        encoder: save_params(dir, "encoder", &gan.encoder)?,
        decoder: save_params(dir, "decoder", &gan.decoder)?,
        critic: save_params(dir, "critic", &gan.critic)?,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<SavedModel, VawganError> {
    let manifest_path: PathBuf = dir.join(MANIFEST_FILE);
    let m: Manifest = read_json(&manifest_path)?;
    if m.format_version != FORMAT_VERSION {
        return Err(VawganError::Config(format!(
            "unsupported model format version {}",
            m.format_version
        )));
    }
    let mut gan = VawGan::init(m.spec, m.weights, m.optimizer)?;
    let encoder = load_params(dir, &m.encoder)?;
    let decoder = load_params(dir, &m.decoder)?;
    let critic = load_params(dir, &m.critic)?;
    check_params("encoder", &encoder, &gan.encoder)?;
    check_params("decoder", &decoder, &gan.decoder)?;
    check_params("critic", &critic, &gan.critic)?;
    gan.encoder = encoder;
    gan.decoder = decoder;
    gan.critic = critic;
    gan.history = m.history;
    let missing = |what: &str| VawganError::Config(format!("{} lacks {what}", manifest_path.display()));
    Ok(match m.kind {
        ModelKind::Spectrum => SavedModel::Spectrum(SpectrumModel {
            gan,
            f0_stats: m.f0_stats.ok_or_else(|| missing("f0_stats"))?,
            f0_condition: m.f0_condition.unwrap_or_default(),
        }),
        ModelKind::Prosody => SavedModel::Prosody(ProsodyModel {
            gan,
            prep: m.prosody.ok_or_else(|| missing("prosody normalization"))?,
        }),
    })
}
