//! Continuous wavelet analysis of normalized log-F0 with the Mexican-hat
//! mother wavelet, and the single-integral inverse used to map converted
//! scaleograms back to a contour.
//!
//! Scales are measured in frames; one frame is one translation step
//! (`tau0_ms`). Coefficients are
//!
//! ```text
//! W[j][b] = s_j^(-1/2) * sum_t x[t] * psi((t - b) / s_j)
//! ```
//!
//! with the signal extended by whole-sample mirroring (`x[-1] = x[0]`) as far
//! as the kernel reaches. Each discrete kernel is truncated at `|t| <= 8 s`
//! and re-centred to an exact zero sum so constants vanish at every scale.
//!
//! The inverse is
//!
//! ```text
//! x[t] = C * sum_j w_j * W[j][t] / sqrt(s_j)
//! ```
//!
//! where `w_j` is the trapezoid weight in `ln s` plus, on the finest scale,
//! the analytic contribution of all scales below it (the Mexican hat's
//! response falls off as `s^2` there, which integrates to one half of the
//! first term). `C` is [`RECONSTRUCTION_C`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::f0prep::{LogF0Track, Stage};
use crate::scalar::Real;

/// Reconstruction constant, fitted by least squares on
/// [`calibration_signal`] with the default grid.
pub const RECONSTRUCTION_C: f64 = 0.46391710344517706;

/// Kernel half-width in units of scale.
pub const KERNEL_HALF_WIDTH: f64 = 8.0;

pub const DEFAULT_N_SCALES: usize = 513;
pub const DEFAULT_TAU0_MS: f64 = 5.0;
pub const DEFAULT_S_MIN: f64 = 1.0;
pub const DEFAULT_S_MAX_CAP: f64 = 512.0;

#[derive(Debug, Error, PartialEq)]
pub enum CwtError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("TooShort: signal needs at least 2 frames, got {0}")]
    TooShort(usize),
    #[error("ShapeError: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Spacing {
    #[default]
    Logarithmic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletConfig {
    pub n_scales: usize,
    pub tau0_ms: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub spacing: Spacing,
}

impl WaveletConfig {
    /// Default grid for an utterance of `n_frames`: 513 log-spaced scales
    /// from one frame up to `min(512, n_frames / 2)` frames.
    pub fn for_length(n_frames: usize) -> Self {
        Self {
            n_scales: DEFAULT_N_SCALES,
            tau0_ms: DEFAULT_TAU0_MS,
            s_min: DEFAULT_S_MIN,
            s_max: DEFAULT_S_MAX_CAP.min(n_frames as f64 / 2.0),
            spacing: Spacing::Logarithmic,
        }
    }

    pub fn validate(&self) -> Result<(), CwtError> {
        if self.n_scales < 2 {
            return Err(CwtError::Config(format!("n_scales must be >= 2, got {}", self.n_scales)));
        }
        if !(self.tau0_ms > 0.0) || !self.tau0_ms.is_finite() {
            return Err(CwtError::Config(format!("tau0_ms must be positive, got {}", self.tau0_ms)));
        }
        if !(self.s_min > 0.0 && self.s_min < self.s_max) || !self.s_max.is_finite() {
            return Err(CwtError::Config(format!(
                "need 0 < s_min < s_max, got s_min={} s_max={}",
                self.s_min, self.s_max
            )));
        }
        Ok(())
    }
}

/// Mexican hat: `2 / (sqrt(3) pi^(1/4)) * (1 - t^2) * exp(-t^2 / 2)`.
#[inline]
pub fn mexican_hat<T: Real>(t: T) -> T {
    let norm = T::lit(2.0 / (3f64.sqrt() * std::f64::consts::PI.powf(0.25)));
    let t2 = t * t;
    norm * (T::one() - t2) * (-t2 / T::lit(2.0)).exp()
}

pub fn build_scales<T: Real>(config: &WaveletConfig) -> Result<Vec<T>, CwtError> {
    config.validate()?;
    let last = (config.n_scales - 1) as f64;
    let scales: Vec<T> = (0..config.n_scales)
        .map(|j| {
            let frac = j as f64 / last;
            let s = match config.spacing {
                Spacing::Logarithmic => config.s_min * (config.s_max / config.s_min).powf(frac),
                Spacing::Linear => config.s_min + (config.s_max - config.s_min) * frac,
            };
            T::lit(s)
        })
        .collect();
    if scales.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CwtError::Config("scale grid is not strictly increasing at this precision".into()));
    }
    Ok(scales)
}

/// Zero-sum discrete kernel `psi(k / s)` for `k` in `[-K, K]`.
fn kernel<T: Real>(scale: T) -> Vec<T> {
    let half = (T::lit(KERNEL_HALF_WIDTH) * scale).ceil().to_usize().expect("finite scale");
    let taps: Vec<(T, T)> = (0..=2 * half)
        .map(|i| {
            let u = (T::from_usize_lossy(i) - T::from_usize_lossy(half)) / scale;
            (mexican_hat(u), (-u * u / T::lit(2.0)).exp())
        })
        .collect();
    let psi_sum: T = taps.iter().map(|&(p, _)| p).sum();
    let gauss_sum: T = taps.iter().map(|&(_, g)| g).sum();
    let lambda = psi_sum / gauss_sum;
    taps.into_iter().map(|(p, g)| p - lambda * g).collect()
}

/// Whole-sample symmetric index map onto `[0, n)`, valid for any offset.
#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Scales × frames coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CwtScaleogram<T = f64> {
    coeffs: Vec<T>,
    scales: Vec<T>,
    config: WaveletConfig,
    source_len: usize,
}

impl<T: Real> CwtScaleogram<T> {
    /// Assembles a scaleogram from `n_scales × source_len` row-major
    /// coefficients, checking the scale grid against `config`.
    pub fn from_parts(coeffs: Vec<T>, config: WaveletConfig, source_len: usize) -> Result<Self, CwtError> {
        let scales = build_scales::<T>(&config)?;
        if coeffs.len() != scales.len() * source_len || source_len == 0 {
            return Err(CwtError::Shape(format!(
                "{} coefficients do not fill {} scales x {source_len} frames",
                coeffs.len(),
                scales.len()
            )));
        }
        Ok(Self {
            coeffs,
            scales,
            config,
            source_len,
        })
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn scales(&self) -> &[T] {
        &self.scales
    }

    pub fn config(&self) -> &WaveletConfig {
        &self.config
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.coeffs[j * self.source_len..(j + 1) * self.source_len]
    }

    /// Frame-major copy: one `n_scales` vector per frame.
    pub fn to_frames(&self) -> Vec<T> {
        let (s, n) = (self.n_scales(), self.source_len);
        let mut out = vec![T::zero(); s * n];
        for j in 0..s {
            for b in 0..n {
                out[b * s + j] = self.coeffs[j * n + b];
            }
        }
        out
    }

    /// Inverse of [`Self::to_frames`].
    pub fn from_frames(frames: &[T], config: WaveletConfig, source_len: usize) -> Result<Self, CwtError> {
        let s = config.n_scales;
        if frames.len() != s * source_len {
            return Err(CwtError::Shape(format!(
                "{} values do not fill {source_len} frames x {s} scales",
                frames.len()
            )));
        }
        let mut coeffs = vec![T::zero(); s * source_len];
        for b in 0..source_len {
            for j in 0..s {
                coeffs[j * source_len + b] = frames[b * s + j];
            }
        }
        Self::from_parts(coeffs, config, source_len)
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
            ..self.clone()
        }
    }
}

/// Forward transform of raw values, without stage checks.
pub fn cwt_values<T: Real>(signal: &[T], config: &WaveletConfig) -> Result<CwtScaleogram<T>, CwtError> {
    let n = signal.len();
    if n < 2 {
        return Err(CwtError::TooShort(n));
    }
    let scales = build_scales::<T>(config)?;
    let rows: Vec<Vec<T>> = scales
        .par_iter()
        .map(|&s| {
            let k = kernel(s);
            let half = (k.len() / 2) as isize;
            // Extended copy so the inner loop is a plain dot product.
            let ext: Vec<T> = (-half..n as isize + half).map(|i| signal[mirror(i, n)]).collect();
            let gain = T::one() / s.sqrt();
            (0..n)
                .map(|b| {
                    let window = &ext[b..b + k.len()];
                    window.iter().zip(&k).fold(T::zero(), |acc, (&x, &w)| acc + x * w) * gain
                })
                .collect()
        })
        .collect();
    Ok(CwtScaleogram {
        coeffs: rows.concat(),
        scales,
        config: *config,
        source_len: n,
    })
}

/// Forward transform of a normalized log-F0 track.
pub fn cwt_forward<T: Real>(signal: &LogF0Track<T>, config: &WaveletConfig) -> Result<CwtScaleogram<T>, CwtError> {
    if signal.stage() != Stage::Normalized {
        return Err(CwtError::Config(format!(
            "cwt expects a normalized track, got {:?}",
            signal.stage()
        )));
    }
    let shift = signal.frame_shift_ms().as_f64();
    if (shift - config.tau0_ms).abs() > 1e-6 * config.tau0_ms {
        return Err(CwtError::Config(format!(
            "track frame shift {shift} ms differs from tau0 {} ms",
            config.tau0_ms
        )));
    }
    cwt_values(signal.values(), config)
}

/// Integration weights `w_j` over a strictly increasing scale grid.
pub fn integration_weights<T: Real>(scales: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    let logs: Vec<T> = scales.iter().map(|s| s.ln()).collect();
    let m = logs.len();
    (0..m)
        .map(|j| {
            let lo = if j > 0 { logs[j] - logs[j - 1] } else { T::zero() };
            let hi = if j + 1 < m { logs[j + 1] - logs[j] } else { T::zero() };
            let tail = if j == 0 { half } else { T::zero() };
            half * (lo + hi) + tail
        })
        .collect()
}

/// Unscaled reconstruction `sum_j w_j W[j][t] / sqrt(s_j)` restricted to the
/// scales selected by `keep`.
pub fn partial_reconstruction<T: Real>(sc: &CwtScaleogram<T>, keep: impl Fn(usize) -> bool) -> Vec<T> {
    let weights = integration_weights(&sc.scales);
    let mut out = vec![T::zero(); sc.source_len];
    for (j, (&s, &w)) in sc.scales.iter().zip(&weights).enumerate() {
        if !keep(j) {
            continue;
        }
        let g = w / s.sqrt();
        for (o, &c) in out.iter_mut().zip(sc.row(j)) {
            *o += g * c;
        }
    }
    out
}

/// Inverse transform back to a normalized log-F0 track.
pub fn cwt_inverse<T: Real>(sc: &CwtScaleogram<T>) -> Result<LogF0Track<T>, CwtError> {
    let expected = build_scales::<T>(&sc.config)?;
    if expected != sc.scales {
        return Err(CwtError::Shape("scale grid does not match the wavelet config".into()));
    }
    if sc.coeffs.len() != sc.scales.len() * sc.source_len {
        return Err(CwtError::Shape("coefficient matrix does not match scales x frames".into()));
    }
    let c = T::lit(RECONSTRUCTION_C);
    let values = partial_reconstruction(sc, |_| true).into_iter().map(|v| v * c).collect();
    Ok(LogF0Track::from_parts(values, T::lit(sc.config.tau0_ms), Stage::Normalized))
}

/// The calibration signal: 1000 frames, unit-amplitude cosines at periods
/// 8, 20, 50, 120 and 300 frames, phased so the mirrored extension is smooth.
pub fn calibration_signal() -> Vec<f64> {
    let n = 1000;
    (0..n)
        .map(|t| {
            [8.0, 20.0, 50.0, 120.0, 300.0]
                .iter()
                .map(|&p: &f64| (std::f64::consts::TAU * (t as f64 + 0.5) / p).cos())
                .sum()
        })
        .collect()
}

/// Least-squares gain mapping the unscaled reconstruction of
/// [`calibration_signal`] onto the signal itself.
pub fn calibrate_reconstruction_constant() -> f64 {
    let x = calibration_signal();
    let config = WaveletConfig::for_length(x.len());
    let sc = cwt_values(&x, &config).expect("calibration config is valid");
    let y = partial_reconstruction(&sc, |_| true);
    let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().map(|b| b * b).sum();
    xy / yy
}

/// Relative RMSE `||a - b|| / ||b||`.
pub fn relative_rmse<T: Real>(approx: &[T], reference: &[T]) -> T {
    let num: T = approx.iter().zip(reference).map(|(&a, &b)| (a - b) * (a - b)).sum();
    let den: T = reference.iter().map(|&b| b * b).sum();
    (num / den).sqrt()
}
