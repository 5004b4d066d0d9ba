use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use evc_core::f0prep::{denormalize, interpolate_unvoiced, normalize_with, to_log, znorm, NormStats, NormStatsFile};
use evc_core::io::{read_f0, read_json, write_features, write_json, FeatureSequence};

use crate::error::{CliError, CliResult};
use crate::files::{ensure_dir, list_dir, print_json, stem};
use crate::Context;

/// Tolerance of the `--verify` round trip, relative per frame.
const ROUND_TRIP_TOL: f64 = 1e-9;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// F0 files: 1-dim EVCF (0 = unvoiced) or CSV `frame,hz,voiced`.
    /// Defaults to every file in the configured F0 directory.
    inputs: Vec<PathBuf>,
    /// Directory for `<stem>.lf0.evcf` and `<stem>.lf0.stats.json`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Pool log-F0 statistics over all inputs (one speaker) instead of
    /// normalizing each utterance with its own.
    #[arg(long, conflicts_with = "stats")]
    shared_stats: bool,
    /// Normalize with statistics from this JSON file instead.
    #[arg(long, value_name = "JSON")]
    stats: Option<PathBuf>,
    /// Check that denormalizing reproduces the interpolated contour.
    #[arg(long)]
    verify: bool,
    /// Frame shift assumed for CSV input.
    #[arg(long, default_value_t = crate::files::DEFAULT_SHIFT_MS)]
    frame_shift_ms: f64,
}

#[derive(Debug, Serialize)]
struct Row {
    input: PathBuf,
    output: PathBuf,
    frames: usize,
    voiced: usize,
    mean: f64,
    std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    round_trip_error: Option<f64>,
}

pub fn run(ctx: &Context, args: Args) -> CliResult<()> {
    let inputs = if args.inputs.is_empty() {
        match &ctx.config.paths.f0 {
            Some(dir) => list_dir(dir)?,
            None => Vec::new(),
        }
    } else {
        args.inputs.clone()
    };
    if inputs.is_empty() {
        return Err(CliError::config("ConfigError: no F0 files given"));
    }
    ensure_dir(&args.out_dir)?;

    let tracks = inputs
        .par_iter()
        .map(|p| -> CliResult<_> {
            let f0 = read_f0(p, args.frame_shift_ms)?;
            let interp = interpolate_unvoiced(&f0).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            let log = to_log(&interp)?;
            Ok((f0, interp, log))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let fixed = if let Some(path) = &args.stats {
        let file: NormStatsFile = read_json(path)?;
        Some(NormStats::try_from(file)?)
    } else if args.shared_stats {
        let pooled: Vec<f64> = tracks.iter().flat_map(|(_, _, log)| log.values().iter().copied()).collect();
        Some(NormStats::from_log_values(&pooled)?)
    } else {
        None
    };

    let rows = inputs
        .par_iter()
        .zip(&tracks)
        .map(|(input, (f0, interp, log))| -> CliResult<Row> {
            let (norm, stats) = match fixed {
                Some(s) => (normalize_with(log, s)?, s),
                None => znorm(log).map_err(|e| CliError::config(format!("{}: {e}", input.display())))?,
            };
            let round_trip_error = if args.verify {
                let back = denormalize(&norm, stats)?;
                let err = back
                    .iter()
                    .zip(interp.values())
                    .map(|(a, b)| (a - b).abs() / b)
                    .fold(0.0, f64::max);
                if err > ROUND_TRIP_TOL {
                    return Err(CliError::config(format!(
                        "{}: round trip error {err:.2e} exceeds {ROUND_TRIP_TOL:e}",
                        input.display()
                    )));
                }
                Some(err)
            } else {
                None
            };
            let name = stem(input);
            let output = args.out_dir.join(format!("{name}.lf0.evcf"));
            let seq = FeatureSequence::new(norm.values().to_vec(), norm.len(), 1, norm.frame_shift_ms())?;
            write_features(&output, &seq)?;
            write_json(&args.out_dir.join(format!("{name}.lf0.stats.json")), &NormStatsFile::from(stats))?;
            Ok(Row {
                input: input.clone(),
                output,
                frames: f0.len(),
                voiced: f0.voiced().iter().filter(|&&v| v).count(),
                mean: stats.mean,
                std: stats.std,
                round_trip_error,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    print_json(&rows)
}
