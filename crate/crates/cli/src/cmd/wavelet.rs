use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use evc_core::cwt::{cwt_forward, cwt_inverse, relative_rmse, CwtScaleogram, WaveletConfig};
use evc_core::f0prep::{LogF0Track, Stage};
use evc_core::io::{read_features, read_json, write_features, write_json, FeatureSequence};

use crate::error::{CliError, CliResult};
use crate::files::{ensure_dir, print_json, stem};
use crate::Context;

/// Largest relative RMSE accepted by `icwt --verify`.
const VERIFY_TOL: f64 = 0.05;

#[derive(Debug, clap::Args)]
pub struct CwtArgs {
    /// Normalized log-F0 tracks (1-dim EVCF, e.g. from `f0prep`).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Directory for `<stem>.cwt.evcf` (frames x scales) and `<stem>.cwt.json`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of scales (default 513).
    #[arg(long)]
    n_scales: Option<usize>,
    /// Smallest scale in frames (default 1).
    #[arg(long)]
    s_min: Option<f64>,
    /// Largest scale in frames (default min(512, frames / 2)).
    #[arg(long)]
    s_max: Option<f64>,
    /// Frame period in ms recorded with the scaleogram (default 5).
    #[arg(long)]
    tau0_ms: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct IcwtArgs {
    /// Scaleograms written by `cwt`; each needs its `<stem>.cwt.json`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Directory for `<stem>.icwt.evcf`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Fail unless the reconstruction is within 5% relative RMSE of the
    /// track the scaleogram was computed from.
    #[arg(long)]
    verify: bool,
}

/// Written next to every scaleogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwtSidecar {
    pub wavelet: WaveletConfig,
    pub source_len: usize,
    pub frame_shift_ms: f64,
    pub source: PathBuf,
}

fn sidecar_path(scaleogram: &Path) -> PathBuf {
    scaleogram.with_file_name(format!("{}.cwt.json", stem(scaleogram)))
}

fn read_track(path: &Path) -> CliResult<FeatureSequence> {
    let seq: FeatureSequence = read_features(path)?;
    if seq.dim() != 1 {
        return Err(CliError::config(format!(
            "ShapeError: {} has dim {}, expected a 1-dim track",
            path.display(),
            seq.dim()
        )));
    }
    Ok(seq)
}

#[derive(Debug, Serialize)]
struct CwtRow {
    input: PathBuf,
    output: PathBuf,
    frames: usize,
    n_scales: usize,
}

pub fn run_cwt(ctx: &Context, args: CwtArgs) -> CliResult<()> {
    ensure_dir(&args.out_dir)?;
    let rows = args
        .inputs
        .par_iter()
        .map(|input| -> CliResult<CwtRow> {
            let seq = read_track(input)?;
            let mut w = ctx.config.wavelet.unwrap_or_else(|| WaveletConfig::for_length(seq.n_frames()));
            w.n_scales = args.n_scales.unwrap_or(w.n_scales);
            w.s_min = args.s_min.unwrap_or(w.s_min);
            w.s_max = args.s_max.unwrap_or(w.s_max);
            w.tau0_ms = args.tau0_ms.unwrap_or(w.tau0_ms);
            w.validate()?;
            let track = LogF0Track::from_parts(seq.data().to_vec(), seq.frame_shift_ms(), Stage::Normalized);
            let sc = cwt_forward(&track, &w)?;
            let name = stem(input);
            let output = args.out_dir.join(format!("{name}.cwt.evcf"));
            let frames = FeatureSequence::new(sc.to_frames(), seq.n_frames(), w.n_scales, seq.frame_shift_ms())?;
            write_features(&output, &frames)?;
            let source = std::path::absolute(input)?;
            let side = CwtSidecar {
                wavelet: w,
                source_len: seq.n_frames(),
                frame_shift_ms: seq.frame_shift_ms(),
                source,
            };
            write_json(&sidecar_path(&output), &side)?;
            Ok(CwtRow {
                input: input.clone(),
                output,
                frames: seq.n_frames(),
                n_scales: w.n_scales,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    print_json(&rows)
}

#[derive(Debug, Serialize)]
struct IcwtRow {
    input: PathBuf,
    output: PathBuf,
    frames: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_rmse: Option<f64>,
}

pub fn run_icwt(_ctx: &Context, args: IcwtArgs) -> CliResult<()> {
    ensure_dir(&args.out_dir)?;
    let rows = args
        .inputs
        .par_iter()
        .map(|input| -> CliResult<IcwtRow> {
            let seq: FeatureSequence = read_features(input)?;
            let side: CwtSidecar = read_json(&sidecar_path(input))?;
            if seq.dim() != side.wavelet.n_scales || seq.n_frames() != side.source_len {
                return Err(CliError::config(format!(
                    "ShapeError: {} is {}x{} but its sidecar describes {}x{}",
                    input.display(),
                    seq.n_frames(),
                    seq.dim(),
                    side.source_len,
                    side.wavelet.n_scales
                )));
            }
            let sc = CwtScaleogram::from_frames(seq.data(), side.wavelet, side.source_len)?;
            let track = cwt_inverse(&sc)?;
            let relative_rmse = if args.verify {
                let source = read_track(&side.source)?;
                let err = relative_rmse(track.values(), source.data());
                if err.is_nan() || err > VERIFY_TOL {
                    return Err(CliError::config(format!(
                        "{}: round trip error {:.2}% exceeds {:.0}%",
                        input.display(),
                        100.0 * err,
                        100.0 * VERIFY_TOL
                    )));
                }
                Some(err)
            } else {
                None
            };
            let output = args.out_dir.join(format!("{}.icwt.evcf", stem(input)));
            write_features(&output, &FeatureSequence::new(track.values().to_vec(), track.len(), 1, side.frame_shift_ms)?)?;
            Ok(IcwtRow {
                input: input.clone(),
                output,
                frames: track.len(),
                relative_rmse,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    print_json(&rows)
}
