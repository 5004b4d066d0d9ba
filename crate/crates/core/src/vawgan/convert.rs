use serde::{Deserialize, Serialize};

use crate::f0prep::{interpolate_unvoiced, to_log, NormStats};
use crate::io::{EmotionCode, F0Contour, FeatureSequence};

use super::train::{ProsodyPrep, VawGan};
use super::VawganError;

/// How per-frame F0 enters the spectrum decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum F0Condition {
    /// `(ln f0 - mean) / std` with corpus statistics.
    #[default]
    NormalizedLog,
    /// Raw Hz.
    Hz,
}

/// Log-F0 statistics used around the prosody network at conversion time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum F0Stats {
    /// Normalize and denormalize with the statistics of the utterance itself.
    #[default]
    SourceUtterance,
    /// Normalize with the source emotion's corpus statistics, denormalize
    /// with the target emotion's.
    EmotionClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumModel {
    pub gan: VawGan,
    pub f0_stats: NormStats,
    pub f0_condition: F0Condition,
}

impl SpectrumModel {
    /// Decoder condition for a continuous contour in Hz.
    pub fn f0_condition_values(&self, hz: &[f64]) -> Result<Vec<f64>, VawganError> {
        if let Some((i, v)) = hz.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(VawganError::Data(format!("F0 frame {i} is {v}, expected a positive value")));
        }
        Ok(match self.f0_condition {
            F0Condition::NormalizedLog => hz
                .iter()
                .map(|v| (v.ln() - self.f0_stats.mean) / self.f0_stats.std)
                .collect(),
            F0Condition::Hz => hz.to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProsodyModel {
    pub gan: VawGan,
    pub prep: ProsodyPrep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Converted {
    pub features: FeatureSequence,
    pub f0: F0Contour,
}

fn require_trained(gan: &VawGan, what: &str) -> Result<(), VawganError> {
    if !gan.is_trained() {
        return Err(VawganError::State(format!("{what} model has not been trained")));
    }
    Ok(())
}

fn check_width(code: EmotionCode, gan: &VawGan) -> Result<(), VawganError> {
    if code.n_classes() != gan.spec.cond.emotion {
        return Err(VawganError::Shape(format!(
            "emotion code width {} but the model expects {}",
            code.n_classes(),
            gan.spec.cond.emotion
        )));
    }
    Ok(())
}

/// Converts a contour to the target emotion through the prosody model and
/// returns a continuous contour in Hz (unvoiced frames included).
pub fn convert_prosody(
    f0: &F0Contour,
    source: EmotionCode,
    target: EmotionCode,
    model: &ProsodyModel,
) -> Result<Vec<f64>, VawganError> {
    convert_prosody_with(f0, source, target, model, F0Stats::default())
}

pub fn convert_prosody_with(
    f0: &F0Contour,
    source: EmotionCode,
    target: EmotionCode,
    model: &ProsodyModel,
    stats: F0Stats,
) -> Result<Vec<f64>, VawganError> {
    require_trained(&model.gan, "prosody")?;
    check_width(source, &model.gan)?;
    check_width(target, &model.gan)?;
    if f0.is_empty() {
        return Err(VawganError::Shape("empty F0 contour".into()));
    }
    let (norm_in, norm_out) = match stats {
        F0Stats::SourceUtterance => {
            let own = NormStats::from_log_values(to_log(&interpolate_unvoiced(f0)?)?.values())?;
            (own, own)
        }
        F0Stats::EmotionClass => (model.prep.class_stats(source)?, model.prep.class_stats(target)?),
    };
    let frames = model.prep.scaleogram_frames_with(f0, norm_in)?;
    let (z, _) = model.gan.encode(&frames)?;
    let n = f0.len();
    let converted = model.gan.decode(&z, &vec![target.index(); n], &[])?;
    model.prep.frames_to_hz_with(&converted, norm_out)
}

/// Decodes every frame of `x` with emotion `target` and the given per-frame
/// F0 in Hz.
pub fn convert_spectrum(
    x: &FeatureSequence,
    target: EmotionCode,
    f0_hz: &[f64],
    model: &SpectrumModel,
) -> Result<FeatureSequence, VawganError> {
    require_trained(&model.gan, "spectrum")?;
    check_width(target, &model.gan)?;
    if x.dim() != model.gan.spec.input_dim || f0_hz.len() != x.n_frames() {
        return Err(VawganError::Shape(format!(
            "{}x{} features with {} F0 frames for a {}-dim model",
            x.n_frames(),
            x.dim(),
            f0_hz.len(),
            model.gan.spec.input_dim
        )));
    }
    let cond = model.f0_condition_values(f0_hz)?;
    let (z, _) = model.gan.encode(x.data())?;
    let out = model.gan.decode(&z, &vec![target.index(); x.n_frames()], &cond)?;
    Ok(FeatureSequence::new(out, x.n_frames(), x.dim(), x.frame_shift_ms())?)
}

/// Full conversion: F0 through the prosody model, then spectral frames
/// decoded with the target emotion and the converted F0. The returned
/// contour keeps the source voicing decisions.
pub fn convert(
    x: &FeatureSequence,
    f0: &F0Contour,
    source: EmotionCode,
    target: EmotionCode,
    spectrum: &SpectrumModel,
    prosody: &ProsodyModel,
) -> Result<Converted, VawganError> {
    convert_with(x, f0, source, target, spectrum, prosody, F0Stats::default())
}

pub fn convert_with(
    x: &FeatureSequence,
    f0: &F0Contour,
    source: EmotionCode,
    target: EmotionCode,
    spectrum: &SpectrumModel,
    prosody: &ProsodyModel,
    stats: F0Stats,
) -> Result<Converted, VawganError> {
    if x.n_frames() != f0.len() {
        return Err(VawganError::Shape(format!(
            "{} feature frames but {} F0 frames",
            x.n_frames(),
            f0.len()
        )));
    }
    require_trained(&spectrum.gan, "spectrum")?;
    let hz = convert_prosody_with(f0, source, target, prosody, stats)?;
    let features = convert_spectrum(x, target, &hz, spectrum)?;
    let masked: Vec<f64> = hz
        .iter()
        .zip(f0.voiced())
        .map(|(&h, &v)| if v { h } else { 0.0 })
        .collect();
    let f0 = F0Contour::new(masked, f0.voiced().to_vec(), f0.frame_shift_ms())?;
    Ok(Converted { features, f0 })
}
