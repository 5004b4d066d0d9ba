use std::path::PathBuf;

use rayon::prelude::*;

use evc_core::io::{write_f0, write_features};
use evc_core::vawgan::{gen_toy_dataset, ToyDatasetSpec};

use crate::error::CliResult;
use crate::files::{ensure_dir, print_json, Corpus, CorpusEntry};
use crate::Context;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory for `<name>.evcf`, `<name>.f0.evcf` and `corpus.json`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Utterances per emotion.
    #[arg(long, default_value_t = ToyDatasetSpec::default().n_utts)]
    n_utts: usize,
    #[arg(long, default_value_t = ToyDatasetSpec::default().n_frames)]
    n_frames: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = ToyDatasetSpec::default().dim)]
    dim: usize,
    /// Spectral tilt separating the two emotions.
    #[arg(long, default_value_t = ToyDatasetSpec::default().delta)]
    delta: f64,
    /// Standard deviation of the per-value noise.
    #[arg(long, default_value_t = ToyDatasetSpec::default().noise)]
    noise: f64,
    /// Width of the emotion one-hot code.
    #[arg(long, default_value_t = ToyDatasetSpec::default().n_classes)]
    n_classes: usize,
}

pub fn run(ctx: &Context, args: Args) -> CliResult<()> {
    let spec = ToyDatasetSpec {
        n_utts: args.n_utts,
        n_frames: args.n_frames,
        dim: args.dim,
        delta: args.delta,
        noise: args.noise,
        n_classes: args.n_classes,
        seed: ctx.seed,
    };
    let ds = gen_toy_dataset(&spec)?;
    ensure_dir(&args.out_dir)?;
    let entries = ds
        .utterances
        .par_iter()
        .map(|u| -> CliResult<CorpusEntry> {
            let entry = CorpusEntry {
                name: u.name.clone(),
                emotion: u.emotion.index(),
                features: format!("{}.evcf", u.name).into(),
                f0: format!("{}.f0.evcf", u.name).into(),
            };
            write_features(&args.out_dir.join(&entry.features), &u.features)?;
            write_f0(&args.out_dir.join(&entry.f0), &u.f0)?;
            Ok(entry)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let corpus = Corpus {
        n_classes: spec.n_classes,
        utterances: entries,
    };
    corpus.save(&args.out_dir)?;
    print_json(&serde_json::json!({
        "out_dir": args.out_dir,
        "utterances": corpus.utterances.len(),
        "seed": ctx.seed,
    }))
}
