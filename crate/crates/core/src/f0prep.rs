//! F0 pre-processing: unvoiced interpolation, log compression and
//! per-utterance standardization, plus the inverse path back to Hz.
//!
//! Logarithms are natural. Standard deviations are population (1/N).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::F0Contour;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum F0Error {
    #[error("NoVoicedFrames: contour has no voiced frame to interpolate from")]
    NoVoicedFrames,
    #[error("DomainError: frame {frame} has nonpositive value {value}")]
    Domain { frame: usize, value: f64 },
    #[error("ZeroVariance: track is constant")]
    ZeroVariance,
    #[error("TooShort: normalization needs at least 2 frames, got {0}")]
    TooShort(usize),
    #[error("RangeError: frame {frame} overflows when mapped back to Hz")]
    Range { frame: usize },
    #[error("StageError: expected {expected:?} track, got {actual:?}")]
    Stage { expected: Stage, actual: Stage },
    #[error("InvalidStats: mean {mean}, std {std}")]
    InvalidStats { mean: f64, std: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    /// Hz values, unvoiced frames filled.
    Interpolated,
    /// Natural log of Hz.
    Log,
    /// Zero mean, unit population variance.
    Normalized,
}

/// Log-F0 standardization statistics, in log-Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

impl NormStats {
    pub fn new(mean: f64, std: f64) -> Result<Self, F0Error> {
        if !mean.is_finite() || !std.is_finite() || std <= 0.0 {
            return Err(F0Error::InvalidStats { mean, std });
        }
        Ok(Self { mean, std })
    }

    /// Statistics of a pooled set of log-F0 values.
    pub fn from_log_values(values: &[f64]) -> Result<Self, F0Error> {
        if values.len() < 2 {
            return Err(F0Error::TooShort(values.len()));
        }
        let (mean, std) = mean_std(values);
        if std == 0.0 {
            return Err(F0Error::ZeroVariance);
        }
        Self::new(mean, std)
    }
}

/// JSON sidecar written next to normalized tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStatsFile {
    pub mean: f64,
    pub std: f64,
    pub log_base: String,
}

impl From<NormStats> for NormStatsFile {
    fn from(s: NormStats) -> Self {
        Self {
            mean: s.mean,
            std: s.std,
            log_base: "e".into(),
        }
    }
}

impl TryFrom<NormStatsFile> for NormStats {
    type Error = F0Error;

    fn try_from(f: NormStatsFile) -> Result<Self, F0Error> {
        if f.log_base != "e" {
            return Err(F0Error::InvalidStats {
                mean: f.mean,
                std: f.std,
            });
        }
        NormStats::new(f.mean, f.std)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogF0Track<T = f64> {
    values: Vec<T>,
    frame_shift_ms: T,
    stage: Stage,
}

impl<T: Real> LogF0Track<T> {
    /// Wraps raw values at a given stage. Used when a track is read back from
    /// disk or produced by an inverse wavelet transform.
    pub fn from_parts(values: Vec<T>, frame_shift_ms: T, stage: Stage) -> Self {
        Self {
            values,
            frame_shift_ms,
            stage,
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn frame_shift_ms(&self) -> T {
        self.frame_shift_ms
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn expect(&self, stage: Stage) -> Result<(), F0Error> {
        if self.stage != stage {
            return Err(F0Error::Stage {
                expected: stage,
                actual: self.stage,
            });
        }
        Ok(())
    }
}

/// Fills unvoiced frames: interior runs linearly between their voiced
/// neighbours, leading and trailing runs by holding the nearest voiced value.
pub fn interpolate_unvoiced<T: Real>(f0: &F0Contour<T>) -> Result<LogF0Track<T>, F0Error> {
    let values = f0.values();
    let voiced = f0.voiced();
    let anchors: Vec<usize> = (0..values.len()).filter(|&i| voiced[i]).collect();
    let (&first, &last) = match (anchors.first(), anchors.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(F0Error::NoVoicedFrames),
    };
    let mut out = values.to_vec();
    out[..first].fill(values[first]);
    out[last + 1..].fill(values[last]);
    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 2 {
            continue;
        }
        let (va, vb) = (values[a], values[b]);
        let span = T::from_usize_lossy(b - a);
        for (k, slot) in out[a + 1..b].iter_mut().enumerate() {
            let frac = T::from_usize_lossy(k + 1) / span;
            *slot = va + (vb - va) * frac;
        }
    }
    Ok(LogF0Track {
        values: out,
        frame_shift_ms: f0.frame_shift_ms(),
        stage: Stage::Interpolated,
    })
}

pub fn to_log<T: Real>(track: &LogF0Track<T>) -> Result<LogF0Track<T>, F0Error> {
    track.expect(Stage::Interpolated)?;
    let values = track
        .values
        .iter()
        .enumerate()
        .map(|(frame, &v)| {
            if v > T::zero() {
                Ok(v.ln())
            } else {
                Err(F0Error::Domain {
                    frame,
                    value: v.as_f64(),
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LogF0Track {
        values,
        frame_shift_ms: track.frame_shift_ms,
        stage: Stage::Log,
    })
}

fn mean_std<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

/// Standardizes a log track with its own statistics.
pub fn znorm<T: Real>(track: &LogF0Track<T>) -> Result<(LogF0Track<T>, NormStats), F0Error> {
    track.expect(Stage::Log)?;
    if track.len() < 2 {
        return Err(F0Error::TooShort(track.len()));
    }
    let (mean, std) = mean_std(&track.values);
    if std == T::zero() {
        return Err(F0Error::ZeroVariance);
    }
    let stats = NormStats::new(mean.as_f64(), std.as_f64())?;
    Ok((normalize_with(track, stats)?, stats))
}

/// Standardizes a log track with externally supplied statistics.
pub fn normalize_with<T: Real>(track: &LogF0Track<T>, stats: NormStats) -> Result<LogF0Track<T>, F0Error> {
    track.expect(Stage::Log)?;
    let mean = T::lit(stats.mean);
    let std = T::lit(stats.std);
    Ok(LogF0Track {
        values: track.values.iter().map(|&v| (v - mean) / std).collect(),
        frame_shift_ms: track.frame_shift_ms,
        stage: Stage::Normalized,
    })
}

/// Maps a normalized track back to Hz: `exp(v * std + mean)`.
pub fn denormalize<T: Real>(track: &LogF0Track<T>, stats: NormStats) -> Result<Vec<T>, F0Error> {
    track.expect(Stage::Normalized)?;
    let stats = NormStats::new(stats.mean, stats.std)?;
    let mean = T::lit(stats.mean);
    let std = T::lit(stats.std);
    track
        .values
        .iter()
        .enumerate()
        .map(|(frame, &v)| {
            let hz = (v * std + mean).exp();
            if hz.is_finite() {
                Ok(hz)
            } else {
                Err(F0Error::Range { frame })
            }
        })
        .collect()
}

/// Runs all three steps on a contour.
pub fn preprocess<T: Real>(f0: &F0Contour<T>) -> Result<(LogF0Track<T>, NormStats), F0Error> {
    znorm(&to_log(&interpolate_unvoiced(f0)?)?)
}
