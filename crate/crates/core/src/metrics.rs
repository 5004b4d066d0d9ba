//! Objective evaluation: DTW alignment, MCD, LSD, F0 RMSE and Pearson
//! correlation.
//!
//! All four distortions are evaluated along one alignment path. When
//! converted and reference utterances differ in length the path comes from
//! DTW over the MCEP sequences and is reused for the spectral and F0 metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::FeatureSequence;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("ShapeError: {0}")]
    Shape(String),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("DomainError: nonpositive spectral value {value} at frame {frame}, dim {dim}")]
    Domain { frame: usize, dim: usize, value: f64 },
    #[error("ZeroVariance: {0} sequence is constant along the path")]
    ZeroVariance(&'static str),
}

/// `10 / ln 10`, the dB factor of the mel-cepstral distortion.
pub const MCD_DB_FACTOR: f64 = 10.0 / std::f64::consts::LN_10;

/// Monotone alignment between two sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPath {
    pairs: Vec<(usize, usize)>,
    cost: f64,
}

impl AlignmentPath {
    /// Validates a path for sequences of lengths `n` and `m`.
    pub fn new(pairs: Vec<(usize, usize)>, cost: f64, n: usize, m: usize) -> Result<Self, MetricError> {
        let path = Self { pairs, cost };
        path.check(n, m)?;
        Ok(path)
    }

    /// One-to-one path over two sequences of equal length.
    pub fn diagonal(n: usize) -> Self {
        Self {
            pairs: (0..n).map(|i| (i, i)).collect(),
            cost: 0.0,
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn check(&self, n: usize, m: usize) -> Result<(), MetricError> {
        let bad = |msg: String| Err(MetricError::Shape(msg));
        match (self.pairs.first(), self.pairs.last()) {
            (Some(&(0, 0)), Some(&(i, j))) if i + 1 == n && j + 1 == m => {}
            (None, _) => return bad("empty alignment path".into()),
            _ => return bad(format!("path must run from (0,0) to ({},{})", n.wrapping_sub(1), m.wrapping_sub(1))),
        }
        for w in self.pairs.windows(2) {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            if !matches!((di, dj), (1, 0) | (0, 1) | (1, 1)) {
                return bad(format!("illegal step {:?} -> {:?}", w[0], w[1]));
            }
        }
        Ok(())
    }
}

fn euclidean<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x - y).as_f64();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Minimum-cost alignment under steps (1,0), (0,1), (1,1) with Euclidean
/// frame distance. Ties prefer the diagonal, then (1,0).
pub fn dtw_align<T: Real>(a: &FeatureSequence<T>, b: &FeatureSequence<T>) -> Result<AlignmentPath, MetricError> {
    if a.dim() != b.dim() {
        return Err(MetricError::Shape(format!("dim mismatch: {} vs {}", a.dim(), b.dim())));
    }
    let (n, m) = (a.n_frames(), b.n_frames());
    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let d = euclidean(a.frame(i), b.frame(j));
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[at(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[at(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[at(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = prev + d;
        }
    }
    let (mut i, mut j) = (n - 1, m - 1);
    let mut pairs = vec![(i, j)];
    while (i, j) != (0, 0) {
        let step = if i == 0 {
            (0, 1)
        } else if j == 0 {
            (1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (1, 1)
            } else if up <= left {
                (1, 0)
            } else {
                (0, 1)
            }
        };
        i -= step.0;
        j -= step.1;
        pairs.push((i, j));
    }
    pairs.reverse();
    Ok(AlignmentPath {
        pairs,
        cost: acc[at(n - 1, m - 1)],
    })
}

fn check_pair<T: Real>(r: &FeatureSequence<T>, c: &FeatureSequence<T>, path: &AlignmentPath) -> Result<(), MetricError> {
    if r.dim() != c.dim() {
        return Err(MetricError::Shape(format!("dim mismatch: {} vs {}", r.dim(), c.dim())));
    }
    path.check(r.n_frames(), c.n_frames())
}

/// Mel-cepstral distortion in dB:
/// mean over the path of `(10 / ln 10) * sqrt(2 * sum_d (r_d - c_d)^2)`.
/// With `has_c0`, column 0 is the energy coefficient and is skipped.
pub fn mcd<T: Real>(
    reference: &FeatureSequence<T>,
    converted: &FeatureSequence<T>,
    path: &AlignmentPath,
    has_c0: bool,
) -> Result<f64, MetricError> {
    check_pair(reference, converted, path)?;
    if has_c0 && reference.dim() < 2 {
        return Err(MetricError::Config("c0 exclusion needs at least 2 coefficients".into()));
    }
    let first = usize::from(has_c0);
    let total: f64 = path
        .pairs
        .iter()
        .map(|&(i, j)| {
            let d = euclidean(&reference.frame(i)[first..], &converted.frame(j)[first..]);
            MCD_DB_FACTOR * (2.0f64).sqrt() * d
        })
        .sum();
    Ok(total / path.len() as f64)
}

/// Log-spectral distortion in dB: per pair the RMS over dims of
/// `20 log10(ref) - 20 log10(conv)`, averaged over the path.
pub fn lsd<T: Real>(reference: &FeatureSequence<T>, converted: &FeatureSequence<T>, path: &AlignmentPath) -> Result<f64, MetricError> {
    check_pair(reference, converted, path)?;
    for seq in [reference, converted] {
        if let Some(k) = seq.data().iter().position(|&v| !(v > T::zero())) {
            return Err(MetricError::Domain {
                frame: k / seq.dim(),
                dim: k % seq.dim(),
                value: seq.data()[k].as_f64(),
            });
        }
    }
    let dim = reference.dim() as f64;
    let total: f64 = path
        .pairs
        .iter()
        .map(|&(i, j)| {
            let ss: f64 = reference
                .frame(i)
                .iter()
                .zip(converted.frame(j))
                .map(|(&r, &c)| {
                    let d = 20.0 * (r.as_f64().log10() - c.as_f64().log10());
                    d * d
                })
                .sum();
            (ss / dim).sqrt()
        })
        .sum();
    Ok(total / path.len() as f64)
}

fn aligned<'a, T: Real>(
    reference: &'a [T],
    converted: &'a [T],
    path: &'a AlignmentPath,
) -> Result<impl Iterator<Item = (f64, f64)> + 'a, MetricError> {
    if path.is_empty() {
        return Err(MetricError::Shape("empty alignment path".into()));
    }
    path.check(reference.len(), converted.len())?;
    Ok(path.pairs.iter().map(|&(i, j)| (reference[i].as_f64(), converted[j].as_f64())))
}

/// Domain in which F0 differences are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum F0Domain {
    #[default]
    Hz,
    LogHz,
}

/// Root mean square F0 difference along the path.
pub fn f0_rmse<T: Real>(reference: &[T], converted: &[T], path: &AlignmentPath) -> Result<f64, MetricError> {
    let mut n = 0usize;
    let mut ss = 0.0;
    for (r, c) in aligned(reference, converted, path)? {
        ss += (r - c) * (r - c);
        n += 1;
    }
    Ok((ss / n as f64).sqrt())
}

/// [`f0_rmse`] taken in the selected domain.
pub fn f0_rmse_in<T: Real>(reference: &[T], converted: &[T], path: &AlignmentPath, domain: F0Domain) -> Result<f64, MetricError> {
    match domain {
        F0Domain::Hz => f0_rmse(reference, converted, path),
        F0Domain::LogHz => {
            let lr: Vec<f64> = reference.iter().map(|v| v.as_f64().ln()).collect();
            let lc: Vec<f64> = converted.iter().map(|v| v.as_f64().ln()).collect();
            f0_rmse(&lr, &lc, path)
        }
    }
}

/// Pearson correlation of the aligned value pairs.
pub fn pcc<T: Real>(reference: &[T], converted: &[T], path: &AlignmentPath) -> Result<f64, MetricError> {
    let pairs: Vec<(f64, f64)> = aligned(reference, converted, path)?.collect();
    let n = pairs.len() as f64;
    let mr = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mc = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(r, c) in &pairs {
        sxy += (r - mr) * (c - mc);
        sxx += (r - mr) * (r - mr);
        syy += (c - mc) * (c - mc);
    }
    if sxx == 0.0 {
        return Err(MetricError::ZeroVariance("reference"));
    }
    if syy == 0.0 {
        return Err(MetricError::ZeroVariance("converted"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mcd_db: f64,
    pub lsd_db: f64,
    pub f0_rmse_hz: f64,
    pub pcc: f64,
    pub n_frames_compared: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Column 0 of the MCEPs is c0 and is excluded from MCD.
    pub mcep_has_c0: bool,
    pub f0_domain: F0Domain,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mcep_has_c0: true,
            f0_domain: F0Domain::Hz,
        }
    }
}

/// Features of one utterance as seen by the evaluator. F0 tracks are
/// interpolated Hz and must have one value per MCEP frame.
pub struct UtteranceFeatures<'a, T: Real> {
    pub mcep: &'a FeatureSequence<T>,
    pub spectrum: &'a FeatureSequence<T>,
    pub f0: &'a [T],
}

/// Aligns on MCEPs and evaluates all four metrics on the shared path.
pub fn evaluate<T: Real>(
    reference: &UtteranceFeatures<'_, T>,
    converted: &UtteranceFeatures<'_, T>,
    opts: EvalOptions,
) -> Result<MetricReport, MetricError> {
    for u in [reference, converted] {
        if u.spectrum.n_frames() != u.mcep.n_frames() || u.f0.len() != u.mcep.n_frames() {
            return Err(MetricError::Shape(format!(
                "MCEP, spectrum and F0 frame counts differ: {}, {}, {}",
                u.mcep.n_frames(),
                u.spectrum.n_frames(),
                u.f0.len()
            )));
        }
    }
    let path = dtw_align(reference.mcep, converted.mcep)?;
    Ok(MetricReport {
        mcd_db: mcd(reference.mcep, converted.mcep, &path, opts.mcep_has_c0)?,
        lsd_db: lsd(reference.spectrum, converted.spectrum, &path)?,
        f0_rmse_hz: f0_rmse_in(reference.f0, converted.f0, &path, opts.f0_domain)?,
        pcc: pcc(reference.f0, converted.f0, &path)?,
        n_frames_compared: path.len(),
    })
}

/// Mean of per-utterance reports; frame counts are summed.
pub fn mean_report(reports: &[MetricReport]) -> Option<MetricReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let avg = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Some(MetricReport {
        mcd_db: avg(|r| r.mcd_db),
        lsd_db: avg(|r| r.lsd_db),
        f0_rmse_hz: avg(|r| r.f0_rmse_hz),
        pcc: avg(|r| r.pcc),
        n_frames_compared: reports.iter().map(|r| r.n_frames_compared).sum(),
    })
}
