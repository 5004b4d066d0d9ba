//! Shared domain types and the EVCF feature file format.
//!
//! EVCF v1 is little-endian:
//!
//! | offset | size | field            |
//! |--------|------|------------------|
//! | 0      | 4    | magic `"EVCF"`   |
//! | 4      | 4    | `u32` version = 1|
//! | 8      | 4    | `u32` n_frames   |
//! | 12     | 4    | `u32` dim        |
//! | 16     | 4    | `f32` frame shift in ms |
//! | 20     | 4·n·d| `f32` payload, row-major |
//!
//! Features are held as `f64` in memory and rounded to `f32` on disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub const EVCF_MAGIC: &[u8; 4] = b"EVCF";
pub const EVCF_VERSION: u32 = 1;
pub const EVCF_HEADER_LEN: usize = 20;

/// Default emotion-ID width.
pub const DEFAULT_EMOTION_CLASSES: usize = 10;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("BadMagic: {path} does not start with \"EVCF\" (found {found:?})")]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("BadVersion: {path} has version {version}, expected 1")]
    BadVersion { path: PathBuf, version: u32 },
    #[error("Truncated: {path} holds {actual} bytes, header implies {expected}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("SizeMismatch: {path} holds {actual} bytes, header implies {expected}")]
    SizeMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("NonFinite: {path} has a non-finite value at frame {frame}, dim {dim}")]
    NonFinite {
        path: PathBuf,
        frame: usize,
        dim: usize,
    },
    #[error("InvalidShape: {0}")]
    InvalidShape(String),
    #[error("Parse error in {path} at line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("JSON error on {path}: {msg}")]
    Json { path: PathBuf, msg: String },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Per-frame fundamental frequency in Hz, zero on unvoiced frames.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Contour<T = f64> {
    values: Vec<T>,
    voiced: Vec<bool>,
    frame_shift_ms: T,
}

impl<T: Real> F0Contour<T> {
    pub fn new(values: Vec<T>, voiced: Vec<bool>, frame_shift_ms: T) -> Result<Self, IoError> {
        if values.len() != voiced.len() {
            return Err(IoError::InvalidShape(format!(
                "F0 contour has {} values but {} voicing flags",
                values.len(),
                voiced.len()
            )));
        }
        if !(frame_shift_ms > T::zero()) || !frame_shift_ms.is_finite() {
            return Err(IoError::InvalidShape(format!(
                "frame shift must be positive, got {frame_shift_ms}"
            )));
        }
        for (i, (&v, &on)) in values.iter().zip(&voiced).enumerate() {
            let ok = if on {
                v > T::zero() && v.is_finite()
            } else {
                v == T::zero()
            };
            if !ok {
                return Err(IoError::InvalidShape(format!(
                    "frame {i}: value {v} inconsistent with voiced={on}"
                )));
            }
        }
        Ok(Self {
            values,
            voiced,
            frame_shift_ms,
        })
    }

    /// Builds a contour treating every positive value as voiced.
    pub fn from_hz(values: Vec<T>, frame_shift_ms: T) -> Result<Self, IoError> {
        let voiced = values.iter().map(|&v| v > T::zero()).collect();
        let values = values
            .into_iter()
            .map(|v| if v > T::zero() { v } else { T::zero() })
            .collect();
        Self::new(values, voiced, frame_shift_ms)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn voiced(&self) -> &[bool] {
        &self.voiced
    }

    pub fn frame_shift_ms(&self) -> T {
        self.frame_shift_ms
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Normalization side information carried with spectral features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormMeta {
    /// Per-frame energy taken out by unit-sum normalization.
    pub energy: Option<Vec<f64>>,
    pub scale_min: Option<Vec<f64>>,
    pub scale_max: Option<Vec<f64>>,
}

/// Frames × dim feature matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence<T = f64> {
    data: Vec<T>,
    n_frames: usize,
    dim: usize,
    frame_shift_ms: T,
    norm_meta: Option<NormMeta>,
}

impl<T: Real> FeatureSequence<T> {
    pub fn new(data: Vec<T>, n_frames: usize, dim: usize, frame_shift_ms: T) -> Result<Self, IoError> {
        if n_frames == 0 || dim == 0 {
            return Err(IoError::InvalidShape(format!(
                "feature sequence must be at least 1x1, got {n_frames}x{dim}"
            )));
        }
        if data.len() != n_frames * dim {
            return Err(IoError::InvalidShape(format!(
                "{} values cannot fill {n_frames}x{dim}",
                data.len()
            )));
        }
        if !(frame_shift_ms > T::zero()) || !frame_shift_ms.is_finite() {
            return Err(IoError::InvalidShape(format!(
                "frame shift must be positive, got {frame_shift_ms}"
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(IoError::InvalidShape(format!(
                "non-finite value at frame {}, dim {}",
                i / dim,
                i % dim
            )));
        }
        Ok(Self {
            data,
            n_frames,
            dim,
            frame_shift_ms,
            norm_meta: None,
        })
    }

    pub fn from_rows(rows: &[Vec<T>], frame_shift_ms: T) -> Result<Self, IoError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(IoError::InvalidShape(format!(
                "row {i} has {} columns, expected {dim}",
                r.len()
            )));
        }
        Self::new(rows.concat(), rows.len(), dim, frame_shift_ms)
    }

    pub fn with_norm_meta(mut self, meta: NormMeta) -> Result<Self, IoError> {
        if let Some(e) = &meta.energy {
            if e.len() != self.n_frames || e.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(IoError::InvalidShape(
                    "energy must hold one positive value per frame".into(),
                ));
            }
        }
        for (name, v) in [("scale_min", &meta.scale_min), ("scale_max", &meta.scale_max)] {
            if let Some(v) = v {
                if v.len() != self.dim {
                    return Err(IoError::InvalidShape(format!(
                        "{name} must hold one value per dimension"
                    )));
                }
            }
        }
        self.norm_meta = Some(meta);
        Ok(self)
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_shift_ms(&self) -> T {
        self.frame_shift_ms
    }

    pub fn norm_meta(&self) -> Option<&NormMeta> {
        self.norm_meta.as_ref()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn frame(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim)
    }

    /// Values of one column across all frames.
    pub fn column(&self, j: usize) -> Vec<T> {
        self.frames().map(|f| f[j]).collect()
    }
}

/// Emotion class index with its one-hot width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmotionCode {
    index: usize,
    n_classes: usize,
}

impl EmotionCode {
    pub fn new(index: usize, n_classes: usize) -> Result<Self, IoError> {
        if index >= n_classes {
            return Err(IoError::InvalidShape(format!(
                "emotion index {index} out of range for {n_classes} classes"
            )));
        }
        Ok(Self { index, n_classes })
    }

    /// Code in the default 10-class space.
    pub fn with_default_width(index: usize) -> Result<Self, IoError> {
        Self::new(index, DEFAULT_EMOTION_CLASSES)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }
}

pub fn one_hot<T: Real>(code: EmotionCode) -> Vec<T> {
    let mut v = vec![T::zero(); code.n_classes];
    v[code.index] = T::one();
    v
}

/// Encodes a sequence as EVCF bytes.
pub fn encode_evcf<T: Real>(seq: &FeatureSequence<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(EVCF_HEADER_LEN + 4 * seq.data.len());
    out.extend_from_slice(EVCF_MAGIC);
    out.extend_from_slice(&EVCF_VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.n_frames as u32).to_le_bytes());
    out.extend_from_slice(&(seq.dim as u32).to_le_bytes());
    out.extend_from_slice(&seq.frame_shift_ms.to_f32().unwrap_or(f32::NAN).to_le_bytes());
    for v in &seq.data {
        out.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
    }
    out
}

/// Decodes EVCF bytes; `path` is only used in diagnostics.
pub fn decode_evcf<T: Real>(bytes: &[u8], path: &Path) -> Result<FeatureSequence<T>, IoError> {
    let p = || path.to_path_buf();
    if bytes.len() < 4 || &bytes[..4] != EVCF_MAGIC {
        let mut found = [0u8; 4];
        let n = bytes.len().min(4);
        found[..n].copy_from_slice(&bytes[..n]);
        return Err(IoError::BadMagic { path: p(), found });
    }
    if bytes.len() < EVCF_HEADER_LEN {
        return Err(IoError::Truncated {
            path: p(),
            expected: EVCF_HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let word = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != EVCF_VERSION {
        return Err(IoError::BadVersion { path: p(), version });
    }
    let n_frames = word(8) as usize;
    let dim = word(12) as usize;
    let shift = f32::from_le_bytes(bytes[16..20].try_into().expect("4 bytes"));
    let expected = n_frames
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(EVCF_HEADER_LEN))
        .ok_or_else(|| IoError::InvalidShape(format!("{n_frames}x{dim} overflows")))?;
    if bytes.len() < expected {
        return Err(IoError::Truncated {
            path: p(),
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(IoError::SizeMismatch {
            path: p(),
            expected,
            actual: bytes.len(),
        });
    }
    let mut data = Vec::with_capacity(n_frames * dim);
    for (i, chunk) in bytes[EVCF_HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(IoError::NonFinite {
                path: p(),
                frame: i / dim.max(1),
                dim: i % dim.max(1),
            });
        }
        data.push(T::from_f32(v).expect("f32 converts"));
    }
    FeatureSequence::new(data, n_frames, dim, T::from_f32(shift).expect("f32 converts"))
}

fn meta_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so a
/// reader never observes a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(IoError::io(path, e));
    }
    Ok(())
}

/// Writes `seq` as EVCF. Normalization metadata, when present, goes to a
/// `<path>.meta.json` sidecar.
pub fn write_features<T: Real>(path: &Path, seq: &FeatureSequence<T>) -> Result<(), IoError> {
    if seq.n_frames > u32::MAX as usize || seq.dim > u32::MAX as usize {
        return Err(IoError::InvalidShape("shape exceeds u32 range".into()));
    }
    write_atomic(path, &encode_evcf(seq))?;
    let side = meta_sidecar(path);
    match &seq.norm_meta {
        Some(meta) => write_json(&side, meta)?,
        None => {
            if side.exists() {
                fs::remove_file(&side).map_err(|e| IoError::io(&side, e))?;
            }
        }
    }
    Ok(())
}

pub fn read_features<T: Real>(path: &Path) -> Result<FeatureSequence<T>, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    let seq = decode_evcf(&bytes, path)?;
    let side = meta_sidecar(path);
    if side.exists() {
        let meta: NormMeta = read_json(&side)?;
        return seq.with_norm_meta(meta);
    }
    Ok(seq)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Json {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> Result<D, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Json {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Parses a rectangular numeric CSV. With `skip_header` the first row is
/// ignored. Line numbers in errors are 1-based.
pub fn parse_csv_matrix(text: &str, skip_header: bool, path: &Path) -> Result<Vec<Vec<f64>>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| IoError::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("column {}: {cell:?} is not a finite number", j + 1),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("ragged row: {} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Imports a CSV matrix as a feature sequence.
pub fn csv_import(path: &Path, frame_shift_ms: f64, skip_header: bool) -> Result<FeatureSequence, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let rows = parse_csv_matrix(&text, skip_header, path)?;
    if rows.is_empty() {
        return Err(IoError::InvalidShape(format!("{} holds no rows", path.display())));
    }
    FeatureSequence::from_rows(&rows, frame_shift_ms)
}

pub fn csv_export<T: Real>(path: &Path, seq: &FeatureSequence<T>) -> Result<(), IoError> {
    let mut text = String::new();
    for f in seq.frames() {
        let line: Vec<String> = f.iter().map(|v| format!("{v}")).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Reads an F0 contour from either a 1-dim EVCF file (Hz, zero = unvoiced)
/// or a CSV of `frame index, Hz, voiced flag` rows. The frame shift of a CSV
/// contour is taken from `default_shift_ms`.
pub fn read_f0(path: &Path, default_shift_ms: f64) -> Result<F0Contour, IoError> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        let seq: FeatureSequence = read_features(path)?;
        if seq.dim() != 1 {
            return Err(IoError::InvalidShape(format!(
                "F0 file {} has dim {}, expected 1",
                path.display(),
                seq.dim()
            )));
        }
        let shift = seq.frame_shift_ms();
        return F0Contour::from_hz(seq.into_data(), shift);
    }
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let header = text
        .lines()
        .next()
        .is_some_and(|l| l.split(',').any(|c| c.trim().parse::<f64>().is_err()));
    let rows = parse_csv_matrix(&text, header, path)?;
    let mut values = Vec::with_capacity(rows.len());
    let mut voiced = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != 3 {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                line: i + 1 + header as usize,
                msg: "expected `frame, hz, voiced`".into(),
            });
        }
        let on = r[2] != 0.0;
        values.push(if on { r[1] } else { 0.0 });
        voiced.push(on);
    }
    F0Contour::new(values, voiced, default_shift_ms)
}

/// Writes an F0 contour as EVCF or CSV, chosen by extension.
pub fn write_f0(path: &Path, f0: &F0Contour) -> Result<(), IoError> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let mut text = String::new();
        for (i, (v, on)) in f0.values().iter().zip(f0.voiced()).enumerate() {
            text.push_str(&format!("{i},{v},{}\n", u8::from(*on)));
        }
        return write_atomic(path, text.as_bytes());
    }
    let seq = FeatureSequence::new(f0.values().to_vec(), f0.len(), 1, f0.frame_shift_ms())?;
    write_features(path, &seq)
}
