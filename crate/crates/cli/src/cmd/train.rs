use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

use evc_core::cwt::WaveletConfig;
use evc_core::io::write_json;
use evc_core::vawgan::{
    gen_toy_dataset, prosody_examples, save_model, spectrum_examples, CondDims, F0Condition, LabeledUtterance,
    ProsodyModel, RealSamples, SavedModel, SpectrumModel, ToyDatasetSpec, VawGan,
};

use crate::error::{CliError, CliResult};
use crate::files::{print_json, Corpus};
use crate::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pipeline {
    /// Spectral frames conditioned on emotion and per-frame F0.
    Spectrum,
    /// CWT frames of log-F0 conditioned on emotion.
    Prosody,
}

impl Pipeline {
    pub fn dir_name(self) -> &'static str {
        match self {
            Pipeline::Spectrum => "spectrum",
            Pipeline::Prosody => "prosody",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum F0CondArg {
    NormalizedLog,
    Hz,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    pipeline: Pipeline,
    /// Corpus manifest or its directory (default: config paths.features).
    #[arg(long, conflicts_with = "toy")]
    corpus: Option<PathBuf>,
    /// Train on a default synthetic corpus generated from --seed.
    #[arg(long)]
    toy: bool,
    /// Output directory (default: <config paths.models>/<pipeline>).
    #[arg(long)]
    model_dir: Option<PathBuf>,
    /// Network preset: dense or full_scale.
    #[arg(long)]
    preset: Option<String>,
    /// Hidden width of the dense preset.
    #[arg(long)]
    hidden: Option<usize>,
    /// Latent size of the dense preset.
    #[arg(long)]
    latent: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// RMSProp decay.
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Critic weight clip bound.
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    critic_steps: Option<usize>,
    /// Weight of the adversarial term.
    #[arg(long)]
    alpha: Option<f64>,
    /// Weight of the reconstruction term.
    #[arg(long)]
    recon_weight: Option<f64>,
    /// Show the critic only frames of this emotion class.
    #[arg(long, value_name = "CLASS")]
    target_only: Option<usize>,
    /// Spectrum pipeline: how F0 enters the decoder.
    #[arg(long, value_enum)]
    f0_condition: Option<F0CondArg>,
}

#[derive(Debug, Serialize)]
struct Summary {
    model_dir: PathBuf,
    pipeline: &'static str,
    preset: String,
    epochs: usize,
    examples: usize,
    seed: u64,
    final_losses: evc_core::vawgan::EpochLosses,
}

fn utterances(ctx: &Context, args: &Args) -> CliResult<Vec<LabeledUtterance>> {
    if args.toy {
        let spec = ToyDatasetSpec {
            seed: ctx.seed,
            ..ToyDatasetSpec::default()
        };
        return Ok(gen_toy_dataset(&spec)?.utterances);
    }
    let path = args
        .corpus
        .as_ref()
        .or(ctx.config.paths.features.as_ref())
        .ok_or_else(|| CliError::config("ConfigError: give --corpus, --toy or paths.features in the config"))?;
    let (corpus, root) = Corpus::load(path)?;
    corpus.read_utterances(&root)
}

pub fn run(ctx: &Context, args: Args) -> CliResult<()> {
    let cfg = &ctx.config;
    let preset = args.preset.clone().unwrap_or_else(|| cfg.preset.clone());
    crate::config::resolve_preset(&preset)?;
    let model_dir = match (&args.model_dir, &cfg.paths.models) {
        (Some(d), _) => d.clone(),
        (None, Some(root)) => root.join(args.pipeline.dir_name()),
        (None, None) => return Err(CliError::config("ConfigError: give --model-dir or paths.models in the config")),
    };

    let mut weights = cfg.weights;
    weights.alpha = args.alpha.unwrap_or(weights.alpha);
    weights.recon_weight = args.recon_weight.unwrap_or(weights.recon_weight);
    let mut opt = cfg.optimizer;
    opt.lr = args.lr.unwrap_or(opt.lr);
    opt.decay = args.decay.unwrap_or(opt.decay);
    opt.epochs = args.epochs.unwrap_or(opt.epochs);
    opt.batch = args.batch.unwrap_or(opt.batch);
    opt.clip = args.clip.unwrap_or(opt.clip);
    opt.critic_steps = args.critic_steps.unwrap_or(opt.critic_steps);
    if let Some(c) = args.target_only {
        opt.real_samples = RealSamples::TargetOnly(c);
    }
    opt.seed = ctx.seed;
    if opt.epochs == 0 {
        return Err(CliError::config("ConfigError: epochs must be at least 1"));
    }
    let mut net_cfg = cfg.clone();
    net_cfg.hidden = args.hidden.unwrap_or(cfg.hidden);
    net_cfg.latent = args.latent.unwrap_or(cfg.latent);

    let utts = utterances(ctx, &args)?;
    let n_classes = utts[0].emotion.n_classes();
    let saved = match args.pipeline {
        Pipeline::Spectrum => {
            let mode = match args.f0_condition {
                Some(F0CondArg::Hz) => F0Condition::Hz,
                Some(F0CondArg::NormalizedLog) => F0Condition::NormalizedLog,
                None => cfg.f0_condition,
            };
            let (ex, f0_stats) = spectrum_examples(&utts, None, mode)?;
            let spec = net_cfg.network(&preset, ex.dim, CondDims { emotion: n_classes, f0: 1 })?;
            let mut gan = VawGan::init(spec, weights, opt)?;
            log::info!("training spectrum model on {} frames", ex.len());
            gan.train(&ex)?;
            SavedModel::Spectrum(SpectrumModel {
                gan,
                f0_stats,
                f0_condition: mode,
            })
        }
        Pipeline::Prosody => {
            let shortest = utts.iter().map(|u| u.f0.len()).min().unwrap_or(0);
            let wavelet = cfg.wavelet.unwrap_or_else(|| WaveletConfig::for_length(shortest));
            let (ex, prep) = prosody_examples(&utts, wavelet)?;
            let spec = net_cfg.network(&preset, ex.dim, CondDims { emotion: n_classes, f0: 0 })?;
            let mut gan = VawGan::init(spec, weights, opt)?;
            log::info!("training prosody model on {} frames", ex.len());
            gan.train(&ex)?;
            SavedModel::Prosody(ProsodyModel { gan, prep })
        }
    };
    save_model(&model_dir, &saved)?;
    let gan = saved.gan();
    write_json(&model_dir.join("history.json"), &gan.history)?;
    print_json(&Summary {
        model_dir,
        pipeline: args.pipeline.dir_name(),
        preset,
        epochs: gan.history.len(),
        examples: utts.iter().map(|u| u.features.n_frames()).sum(),
        seed: ctx.seed,
        final_losses: *gan.history.last().expect("at least one epoch"),
    })
}
