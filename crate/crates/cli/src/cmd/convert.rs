use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use evc_core::io::{read_f0, read_features, write_f0, write_features, EmotionCode, F0Contour, FeatureSequence};
use evc_core::vawgan::{convert_with, load_model, F0Stats, ProsodyModel, SavedModel, SpectrumModel, MANIFEST_FILE};

use crate::error::{CliError, CliResult};
use crate::files::{ensure_dir, print_json, stem, Corpus, DEFAULT_SHIFT_MS};
use crate::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum F0StatsArg {
    /// Normalize and denormalize log-F0 with the utterance's own statistics.
    SourceUtterance,
    /// Source-emotion statistics in, target-emotion statistics out.
    EmotionClass,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Spectrum model directory (default: <config paths.models>/spectrum).
    #[arg(long)]
    spectrum_model: Option<PathBuf>,
    /// Prosody model directory (default: <config paths.models>/prosody).
    #[arg(long)]
    prosody_model: Option<PathBuf>,
    /// Convert every utterance of this corpus manifest.
    #[arg(long, conflicts_with_all = ["features", "f0", "source"])]
    corpus: Option<PathBuf>,
    /// Features of a single utterance (EVCF).
    #[arg(long, requires_all = ["f0", "source"])]
    features: Option<PathBuf>,
    /// F0 of the single utterance (EVCF or CSV).
    #[arg(long)]
    f0: Option<PathBuf>,
    /// Emotion class of the single utterance.
    #[arg(long)]
    source: Option<usize>,
    /// Target emotion class.
    #[arg(long)]
    target: usize,
    /// Directory for `<name>.evcf` and `<name>.f0.evcf`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Log-F0 statistics used around the prosody model.
    #[arg(long, value_enum)]
    f0_stats: Option<F0StatsArg>,
}

struct Job {
    name: String,
    features: FeatureSequence,
    f0: F0Contour,
    source: usize,
}

#[derive(Debug, Serialize)]
struct Row {
    name: String,
    source: usize,
    target: usize,
    frames: usize,
    features: PathBuf,
    f0: PathBuf,
}

fn model_dir(given: &Option<PathBuf>, ctx: &Context, kind: &str) -> CliResult<PathBuf> {
    given
        .clone()
        .or_else(|| ctx.config.paths.models.as_ref().map(|r| r.join(kind)))
        .ok_or_else(|| CliError::config(format!("StateError: no {kind} model given")))
}

fn load(dir: &Path, kind: &str) -> CliResult<SavedModel> {
    if !dir.join(MANIFEST_FILE).is_file() {
        return Err(CliError::config(format!(
            "StateError: no trained {kind} model at {}",
            dir.display()
        )));
    }
    Ok(load_model(dir)?)
}

fn jobs(args: &Args) -> CliResult<Vec<Job>> {
    if let Some(path) = &args.corpus {
        let (corpus, root) = Corpus::load(path)?;
        let utts = corpus.read_utterances(&root)?;
        return Ok(utts
            .into_iter()
            .map(|u| Job {
                name: u.name,
                source: u.emotion.index(),
                features: u.features,
                f0: u.f0,
            })
            .collect());
    }
    let (Some(features), Some(f0), Some(source)) = (&args.features, &args.f0, args.source) else {
        return Err(CliError::config("ConfigError: give --corpus or --features, --f0 and --source"));
    };
    Ok(vec![Job {
        name: stem(features),
        features: read_features(features)?,
        f0: read_f0(f0, DEFAULT_SHIFT_MS)?,
        source,
    }])
}

pub fn run(ctx: &Context, args: Args) -> CliResult<()> {
    let spectrum_dir = model_dir(&args.spectrum_model, ctx, "spectrum")?;
    let prosody_dir = model_dir(&args.prosody_model, ctx, "prosody")?;
    let SavedModel::Spectrum(spectrum) = load(&spectrum_dir, "spectrum")? else {
        return Err(CliError::config(format!("StateError: {} holds a prosody model", spectrum_dir.display())));
    };
    let SavedModel::Prosody(prosody) = load(&prosody_dir, "prosody")? else {
        return Err(CliError::config(format!("StateError: {} holds a spectrum model", prosody_dir.display())));
    };
    let stats = match args.f0_stats {
        Some(F0StatsArg::SourceUtterance) => F0Stats::SourceUtterance,
        Some(F0StatsArg::EmotionClass) => F0Stats::EmotionClass,
        None => ctx.config.f0_stats,
    };
    let work = jobs(&args)?;
    ensure_dir(&args.out_dir)?;
    let rows = work
        .par_iter()
        .map(|job| convert_one(job, &args, &spectrum, &prosody, stats))
        .collect::<CliResult<Vec<_>>>()?;
    print_json(&rows)
}

fn convert_one(
    job: &Job,
    args: &Args,
    spectrum: &SpectrumModel,
    prosody: &ProsodyModel,
    stats: F0Stats,
) -> CliResult<Row> {
    let width = spectrum.gan.spec.cond.emotion;
    let code = |i: usize| EmotionCode::new(i, width).map_err(|e| CliError::config(format!("{}: {e}", job.name)));
    let out = convert_with(
        &job.features,
        &job.f0,
        code(job.source)?,
        code(args.target)?,
        spectrum,
        prosody,
        stats,
    )
    .map_err(|e| match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", job.name)),
        other => other,
    })?;
    let features = args.out_dir.join(format!("{}.evcf", job.name));
    let f0 = args.out_dir.join(format!("{}.f0.evcf", job.name));
    write_features(&features, &out.features)?;
    write_f0(&f0, &out.f0)?;
    Ok(Row {
        name: job.name.clone(),
        source: job.source,
        target: args.target,
        frames: out.features.n_frames(),
        features,
        f0,
    })
}
