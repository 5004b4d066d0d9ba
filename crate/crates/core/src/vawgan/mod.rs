//! Variational autoencoding Wasserstein GAN for emotional voice conversion.
//!
//! Two networks of identical structure are trained separately: a spectrum
//! model over spectral frames conditioned on emotion and per-frame F0, and a
//! prosody model over CWT frames of log-F0 conditioned on emotion only.
//! Training math runs in `f64`.

mod convert;
mod network;
mod objective;
mod persist;
mod probe;
mod toy;
mod train;

use thiserror::Error;

use crate::autodiff::AdError;
use crate::cwt::CwtError;
use crate::f0prep::F0Error;
use crate::io::IoError;

pub use convert::{
    convert, convert_prosody, convert_prosody_with, convert_spectrum, convert_with, Converted, F0Condition, F0Stats,
    ProsodyModel, SpectrumModel,
};
pub use network::{CondDims, Layer, NetworkSpec, Padding, Params};
pub use objective::{
    critic_losses, critic_losses_var, kl_term, kl_to_standard_normal, reparameterize, reparameterize_var, vae_objective,
    vae_objective_var, CriticLosses, GaussianPosterior, LossWeights,
};
pub use persist::{load_model, save_model, ModelKind, SavedModel, MANIFEST_FILE};
pub use probe::{latent_emotion_probe, ProbeConfig};
pub use toy::{gen_toy_dataset, ToyDataset, ToyDatasetSpec, LabeledUtterance};
pub use train::{
    prosody_examples, spectrum_examples, train_pipeline, EpochLosses, Examples, ProsodyPrep, RealSamples,
    TrainConfig, VawGan,
};

#[derive(Debug, Error)]
pub enum VawganError {
    #[error("ShapeError: {0}")]
    Shape(String),
    #[error(transparent)]
    Autodiff(#[from] AdError),
    #[error("TrainingDiverged: non-finite loss in epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("StateError: {0}")]
    State(String),
    #[error("DataError: {0}")]
    Data(String),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Cwt(#[from] CwtError),
    #[error(transparent)]
    F0(#[from] F0Error),
}
