use serde::{Deserialize, Serialize};

use crate::io::{EmotionCode, F0Contour, FeatureSequence};
use crate::rng::SeededRng;

use super::VawganError;

const CONTENT_BASIS: usize = 4;
const CONTENT_RHO: f64 = 0.9;
const FRAME_SHIFT_MS: f64 = 5.0;

/// Synthetic two-emotion corpus. Emotion 0 has a rising spectral tilt and a
/// low, slowly modulated F0; emotion 1 has a falling tilt and a high, fast
/// modulated, jittered F0. The per-frame content envelope is orthogonal to
/// the tilt direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyDatasetSpec {
    pub n_utts: usize,
    pub n_frames: usize,
    pub dim: usize,
    pub delta: f64,
    pub noise: f64,
    pub n_classes: usize,
    pub seed: u64,
}

impl Default for ToyDatasetSpec {
    fn default() -> Self {
        Self {
            n_utts: 8,
            n_frames: 64,
            dim: 32,
            delta: 0.2,
            noise: 0.25,
            n_classes: crate::io::DEFAULT_EMOTION_CLASSES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUtterance {
    pub name: String,
    pub emotion: EmotionCode,
    pub features: FeatureSequence,
    pub f0: F0Contour,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    pub spec: ToyDatasetSpec,
    pub utterances: Vec<LabeledUtterance>,
}

impl ToyDataset {
    pub fn of_emotion(&self, index: usize) -> impl Iterator<Item = &LabeledUtterance> {
        self.utterances.iter().filter(move |u| u.emotion.index() == index)
    }
}

/// Unit-norm linear ramp across the feature axis.
pub(crate) fn tilt_direction(dim: usize) -> Vec<f64> {
    let c = (dim as f64 - 1.0) / 2.0;
    let r: Vec<f64> = (0..dim).map(|d| d as f64 - c).collect();
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    r.into_iter().map(|v| v / norm).collect()
}

fn content_basis(dim: usize) -> Vec<Vec<f64>> {
    let tilt = tilt_direction(dim);
    (1..=CONTENT_BASIS)
        .map(|k| {
            let mut b: Vec<f64> = (0..dim)
                .map(|d| (std::f64::consts::PI * k as f64 * (d as f64 + 0.5) / dim as f64).cos())
                .collect();
            let proj: f64 = b.iter().zip(&tilt).map(|(x, t)| x * t).sum();
            b.iter_mut().zip(&tilt).for_each(|(x, t)| *x -= proj * t);
            b
        })
        .collect()
}

pub fn gen_toy_dataset(spec: &ToyDatasetSpec) -> Result<ToyDataset, VawganError> {
    if spec.n_utts == 0 || spec.n_frames < 16 || spec.dim < 2 || spec.n_classes < 2 {
        return Err(VawganError::Config(format!(
            "toy corpus needs n_utts >= 1, n_frames >= 16, dim >= 2, n_classes >= 2, got {spec:?}"
        )));
    }
    if !(spec.delta > 0.0) || !(spec.noise >= 0.0) {
        return Err(VawganError::Config("delta must be positive and noise non-negative".into()));
    }
    let mut rng = SeededRng::new(spec.seed);
    let basis = content_basis(spec.dim);
    let tilt = tilt_direction(spec.dim);
    let ramp_scale = tilt.last().copied().unwrap_or(1.0);
    let mut utterances = Vec::with_capacity(2 * spec.n_utts);
    for emotion in 0..2 {
        let sign = if emotion == 0 { 1.0 } else { -1.0 };
        for u in 0..spec.n_utts {
            let mut a: Vec<f64> = (0..CONTENT_BASIS).map(|_| rng.normal()).collect();
            let mut frames = Vec::with_capacity(spec.n_frames * spec.dim);
            for _ in 0..spec.n_frames {
                for (k, ak) in a.iter_mut().enumerate() {
                    let innov = (1.0 - CONTENT_RHO * CONTENT_RHO).sqrt() * rng.normal();
                    *ak = CONTENT_RHO * *ak + innov / (k as f64 + 1.0).sqrt();
                }
                for d in 0..spec.dim {
                    let content: f64 = basis.iter().zip(&a).map(|(b, ak)| b[d] * ak).sum();
                    let slope = sign * spec.delta * tilt[d] / ramp_scale;
                    frames.push(content + slope + spec.noise * rng.normal());
                }
            }
            let phase = rng.uniform_range(0.0, std::f64::consts::TAU);
            let hz: Vec<f64> = (0..spec.n_frames)
                .map(|t| {
                    let t = t as f64;
                    if emotion == 0 {
                        120.0 + 15.0 * (std::f64::consts::TAU * t / 80.0 + phase).sin()
                    } else {
                        180.0 + 25.0 * (std::f64::consts::TAU * t / 20.0 + phase).sin() + 3.0 * rng.normal()
                    }
                })
                .collect();
            let gap_len = 3 + rng.below(6);
            let gap_start = 1 + rng.below(spec.n_frames - gap_len - 2);
            let voiced: Vec<bool> = (0..spec.n_frames)
                .map(|t| !(gap_start..gap_start + gap_len).contains(&t))
                .collect();
            let values = hz.iter().zip(&voiced).map(|(&h, &v)| if v { h } else { 0.0 }).collect();
            utterances.push(LabeledUtterance {
                name: format!("{}_{u:03}", if emotion == 0 { "a" } else { "b" }),
                emotion: EmotionCode::new(emotion, spec.n_classes)?,
                features: FeatureSequence::new(frames, spec.n_frames, spec.dim, FRAME_SHIFT_MS)?,
                f0: F0Contour::new(values, voiced, FRAME_SHIFT_MS)?,
            });
        }
    }
    Ok(ToyDataset {
        spec: *spec,
        utterances,
    })
}
