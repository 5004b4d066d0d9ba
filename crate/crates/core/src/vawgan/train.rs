use serde::{Deserialize, Serialize};

use crate::autodiff::{concat, rmsprop_step, AdError, RmsProp, Tape, Tensor, Var};
use crate::cwt::{cwt_forward, cwt_inverse, CwtScaleogram, WaveletConfig};
use crate::f0prep::{denormalize, interpolate_unvoiced, normalize_with, to_log, NormStats};
use crate::io::{EmotionCode, F0Contour};
use crate::rng::SeededRng;

use super::convert::F0Condition;
use super::network::{forward, Params};
use super::objective::{critic_losses_var, reparameterize_var, vae_objective_var, LossWeights};
use super::toy::LabeledUtterance;
use super::{NetworkSpec, VawganError};

/// Source of the real frames shown to the critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RealSamples {
    /// Every frame of the minibatch.
    #[default]
    Pooled,
    /// Only frames of one emotion class, with fakes decoded for that class.
    TargetOnly(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    /// Critic weight clip bound.
    pub clip: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub critic_steps: usize,
    pub real_samples: RealSamples,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            decay: 0.9,
            eps: 1e-8,
            clip: 0.01,
            epochs: 200,
            batch: 64,
            seed: 0,
            critic_steps: 1,
            real_samples: RealSamples::Pooled,
        }
    }
}

impl TrainConfig {
    /// Full-scale schedule: learning rate 1e-5, batch 256, 45 epochs.
    pub fn full_scale() -> Self {
        Self {
            lr: 1e-5,
            batch: 256,
            epochs: 45,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), VawganError> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.decay)
            && self.eps >= 0.0
            && self.clip > 0.0
            && self.batch >= 1;
        if !ok {
            return Err(VawganError::Config(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }

    fn rmsprop(&self) -> RmsProp {
        RmsProp {
            lr: self.lr,
            decay: self.decay,
            eps: self.eps,
        }
    }
}

/// Per-epoch averages over minibatches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLosses {
    pub recon_mse: f64,
    pub kl: f64,
    pub gen_adv: f64,
    pub critic: f64,
}

/// Frame-level training examples: inputs, emotion labels and per-frame
/// extra conditions, all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Examples {
    pub x: Vec<f64>,
    pub dim: usize,
    pub labels: Vec<usize>,
    pub cond: Vec<f64>,
    pub cond_dim: usize,
    pub n_classes: usize,
}

impl Examples {
    pub fn new(
        x: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        cond: Vec<f64>,
        cond_dim: usize,
        n_classes: usize,
    ) -> Result<Self, VawganError> {
        let n = labels.len();
        if n == 0 || dim == 0 || x.len() != n * dim || cond.len() != n * cond_dim {
            return Err(VawganError::Shape(format!(
                "{n} labels, {} inputs of width {dim}, {} conditions of width {cond_dim}",
                x.len(),
                cond.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(VawganError::Data(format!("label {bad} outside {n_classes} classes")));
        }
        Ok(Self {
            x,
            dim,
            labels,
            cond,
            cond_dim,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    fn gather(&self, idx: &[usize]) -> (Tensor, Vec<usize>, Tensor) {
        let mut x = Vec::with_capacity(idx.len() * self.dim);
        let mut cond = Vec::with_capacity(idx.len() * self.cond_dim);
        for &i in idx {
            x.extend_from_slice(self.row(i));
            cond.extend_from_slice(&self.cond[i * self.cond_dim..(i + 1) * self.cond_dim]);
        }
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        (
            Tensor::from_fn(&[idx.len(), self.dim], |k| x[k]),
            labels,
            Tensor::from_fn(&[idx.len(), self.cond_dim], |k| cond[k]),
        )
    }
}

fn one_hot_rows(labels: &[usize], width: usize) -> Tensor {
    Tensor::from_fn(&[labels.len(), width], |k| if labels[k / width] == k % width { 1.0 } else { 0.0 })
}

/// Encoder, decoder and critic parameters with their training record.
#[derive(Debug, Clone, PartialEq)]
pub struct VawGan {
    pub spec: NetworkSpec,
    pub weights: LossWeights,
    pub config: TrainConfig,
    pub encoder: Params,
    pub decoder: Params,
    pub critic: Params,
    pub history: Vec<EpochLosses>,
}

fn diverged(epoch: usize) -> impl Fn(AdError) -> VawganError {
    move |e| match e {
        AdError::NonFinite { .. } => VawganError::TrainingDiverged { epoch },
        other => VawganError::Autodiff(other),
    }
}

impl VawGan {
    /// Seeded initialization; critic weights start inside the clip bound.
    pub fn init(spec: NetworkSpec, weights: LossWeights, config: TrainConfig) -> Result<Self, VawganError> {
        spec.validate()?;
        weights.validate()?;
        config.validate()?;
        let mut rng = SeededRng::new(config.seed);
        let encoder = Params::init(&spec.encoder, &mut rng.fork(1));
        let decoder = Params::init(&spec.decoder, &mut rng.fork(2));
        let mut critic = Params::init(&spec.critic, &mut rng.fork(3));
        critic.clip(config.clip);
        Ok(Self {
            spec,
            weights,
            config,
            encoder,
            decoder,
            critic,
            history: Vec::new(),
        })
    }

    pub fn is_trained(&self) -> bool {
        !self.history.is_empty()
    }

    fn check_rows(&self, x: &[f64], width: usize, what: &str) -> Result<usize, VawganError> {
        if width == 0 || x.is_empty() || !x.len().is_multiple_of(width) {
            return Err(VawganError::Shape(format!(
                "{what}: {} values do not form rows of width {width}",
                x.len()
            )));
        }
        Ok(x.len() / width)
    }

    /// Posterior means and log-variances for a row-major batch.
    pub fn encode(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), VawganError> {
        let n = self.check_rows(x, self.spec.input_dim, "encoder input")?;
        let l = self.spec.latent_dim;
        let tape = Tape::new();
        let params = self.encoder.constants(&tape);
        let input = tape.constant(Tensor::new(vec![n, self.spec.input_dim], x.to_vec())?);
        let h = forward(&self.spec.encoder, &params, input)?.value();
        let mut mean = Vec::with_capacity(n * l);
        let mut log_var = Vec::with_capacity(n * l);
        for row in h.data().chunks_exact(2 * l) {
            mean.extend_from_slice(&row[..l]);
            log_var.extend_from_slice(&row[l..]);
        }
        Ok((mean, log_var))
    }

    /// Decodes latent rows conditioned on emotion labels and extra
    /// per-row conditions.
    pub fn decode(&self, z: &[f64], labels: &[usize], cond: &[f64]) -> Result<Vec<f64>, VawganError> {
        let n = self.check_rows(z, self.spec.latent_dim, "latent")?;
        let (e, f) = (self.spec.cond.emotion, self.spec.cond.f0);
        if labels.len() != n || cond.len() != n * f {
            return Err(VawganError::Shape(format!(
                "{n} latent rows with {} labels and {} condition values (width {f})",
                labels.len(),
                cond.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= e) {
            return Err(VawganError::Shape(format!("emotion {bad} outside one-hot width {e}")));
        }
        let tape = Tape::new();
        let params = self.decoder.constants(&tape);
        let zv = tape.constant(Tensor::new(vec![n, self.spec.latent_dim], z.to_vec())?);
        let input = self.decoder_input(&tape, zv, labels, Tensor::new(vec![n, f], cond.to_vec())?)?;
        Ok(forward(&self.spec.decoder, &params, input)?.value().into_data())
    }

    /// Single-frame decoding from `concat(z, one_hot(emotion), f0_cond)`.
    pub fn decode_conditioned(&self, z: &[f64], emotion: EmotionCode, f0_cond: &[f64]) -> Result<Vec<f64>, VawganError> {
        if z.len() != self.spec.latent_dim
            || emotion.n_classes() != self.spec.cond.emotion
            || f0_cond.len() != self.spec.cond.f0
        {
            return Err(VawganError::Shape(format!(
                "decoder expects widths ({}, {}, {}), got ({}, {}, {})",
                self.spec.latent_dim,
                self.spec.cond.emotion,
                self.spec.cond.f0,
                z.len(),
                emotion.n_classes(),
                f0_cond.len()
            )));
        }
        self.decode(z, &[emotion.index()], f0_cond)
    }

    fn decoder_input<'t>(&self, tape: &'t Tape, z: Var<'t>, labels: &[usize], cond: Tensor) -> Result<Var<'t>, AdError> {
        let mut parts = vec![z, tape.constant(one_hot_rows(labels, self.spec.cond.emotion))];
        if self.spec.cond.f0 > 0 {
            parts.push(tape.constant(cond));
        }
        concat(&parts, 1)
    }

    /// Reconstruction through the posterior mean.
    pub fn reconstruct(&self, data: &Examples) -> Result<Vec<f64>, VawganError> {
        let (mean, _) = self.encode(&data.x)?;
        self.decode(&mean, &data.labels, &data.cond)
    }

    /// Mean squared reconstruction error through the posterior mean.
    pub fn recon_mse(&self, data: &Examples) -> Result<f64, VawganError> {
        let recon = self.reconstruct(data)?;
        Ok(data.x.iter().zip(&recon).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / recon.len() as f64)
    }

    /// Critic scores for a row-major batch.
    pub fn critic_scores(&self, x: &[f64]) -> Result<Vec<f64>, VawganError> {
        let n = self.check_rows(x, self.spec.input_dim, "critic input")?;
        let tape = Tape::new();
        let params = self.critic.constants(&tape);
        let input = tape.constant(Tensor::new(vec![n, self.spec.input_dim], x.to_vec())?);
        Ok(forward(&self.spec.critic, &params, input)?.value().into_data())
    }

    fn check_examples(&self, data: &Examples) -> Result<(), VawganError> {
        if data.dim != self.spec.input_dim || data.cond_dim != self.spec.cond.f0 || data.n_classes > self.spec.cond.emotion {
            return Err(VawganError::Shape(format!(
                "examples (dim {}, cond {}, {} classes) do not fit network (dim {}, cond {}, emotion width {})",
                data.dim, data.cond_dim, data.n_classes, self.spec.input_dim, self.spec.cond.f0, self.spec.cond.emotion
            )));
        }
        if data.is_empty() {
            return Err(VawganError::Data("no training examples".into()));
        }
        Ok(())
    }

    /// Runs `self.config.epochs` epochs, appending to the history.
    pub fn train(&mut self, data: &Examples) -> Result<(), VawganError> {
        self.check_examples(data)?;
        let cfg = self.config;
        let opt = cfg.rmsprop();
        let mut rng = SeededRng::new(cfg.seed).fork(4 + self.history.len() as u64);
        let mut enc_state = RmsProp::init_state(&self.encoder.tensors);
        let mut dec_state = RmsProp::init_state(&self.decoder.tensors);
        let mut crit_state = RmsProp::init_state(&self.critic.tensors);
        let mut order: Vec<usize> = (0..data.len()).collect();
        for _ in 0..cfg.epochs {
            let epoch = self.history.len();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.below(i + 1));
            }
            let mut sums = [0.0; 4];
            let mut n_batches = 0;
            for chunk in order.chunks(cfg.batch) {
                let mut idx = chunk.to_vec();
                let n_target = match cfg.real_samples {
                    RealSamples::Pooled => idx.len(),
                    RealSamples::TargetOnly(c) => {
                        idx.sort_by_key(|&i| (data.labels[i] != c, i));
                        idx.iter().take_while(|&&i| data.labels[i] == c).count()
                    }
                };
                let (x, labels, cond) = data.gather(&idx);
                let (gen, fake) = self
                    .generator_step(x.clone(), &labels, cond, n_target, &mut rng, &opt, &mut enc_state, &mut dec_state)
                    .map_err(diverged(epoch))?;
                let mut critic = 0.0;
                if n_target > 0 {
                    for _ in 0..cfg.critic_steps {
                        critic = self
                            .critic_step(&x, &fake, n_target, &opt, &mut crit_state)
                            .map_err(diverged(epoch))?;
                    }
                }
                for (s, v) in sums.iter_mut().zip([gen[0], gen[1], gen[2], critic]) {
                    *s += v;
                }
                n_batches += 1;
            }
            let m = n_batches as f64;
            let losses = EpochLosses {
                recon_mse: sums[0] / m,
                kl: sums[1] / m,
                gen_adv: sums[2] / m,
                critic: sums[3] / m,
            };
            if [losses.recon_mse, losses.kl, losses.gen_adv, losses.critic]
                .iter()
                .any(|v| !v.is_finite())
            {
                return Err(VawganError::TrainingDiverged { epoch });
            }
            self.history.push(losses);
        }
        Ok(())
    }

    /// One encoder/decoder update. Returns `[mse, kl, gen_adv]` and the
    /// reconstructed batch for the critic.
    #[allow(clippy::too_many_arguments)]
    fn generator_step(
        &mut self,
        x: Tensor,
        labels: &[usize],
        cond: Tensor,
        n_target: usize,
        rng: &mut SeededRng,
        opt: &RmsProp,
        enc_state: &mut [Tensor],
        dec_state: &mut [Tensor],
    ) -> Result<([f64; 3], Tensor), AdError> {
        let n = labels.len();
        let l = self.spec.latent_dim;
        let tape = Tape::new();
        let enc = self.encoder.leaves(&tape);
        let dec = self.decoder.leaves(&tape);
        let crit = self.critic.constants(&tape);
        let xv = tape.constant(x);
        let h = forward(&self.spec.encoder, &enc, xv)?;
        let (mean, log_var) = (h.narrow(1, 0, l)?, h.narrow(1, l, l)?);
        let eps = Tensor::from_fn(&[n, l], |_| rng.normal());
        let z = reparameterize_var(mean, log_var, eps)?;
        let input = self.decoder_input(&tape, z, labels, cond)?;
        let recon = forward(&self.spec.decoder, &dec, input)?;
        let (vae, kl, mse) = vae_objective_var(xv, recon, mean, log_var, &self.weights)?;
        let mut gen_adv = 0.0;
        let mut loss = vae;
        if self.weights.alpha > 0.0 && n_target > 0 {
            let d_fake = forward(&self.spec.critic, &crit, recon.narrow(0, 0, n_target)?)?;
            let adv = d_fake.mean()?.scale(-self.weights.alpha)?;
            gen_adv = adv.item();
            loss = loss.add(adv)?;
        }
        let grads = tape.backward(loss)?;
        let g_enc: Vec<Tensor> = enc.iter().map(|&v| grads.wrt(v)).collect();
        let g_dec: Vec<Tensor> = dec.iter().map(|&v| grads.wrt(v)).collect();
        let fake = recon.value();
        let stats = [mse.item(), kl.item(), gen_adv];
        rmsprop_step(&mut self.encoder.tensors, &g_enc, enc_state, opt.lr, opt.decay, opt.eps)?;
        rmsprop_step(&mut self.decoder.tensors, &g_dec, dec_state, opt.lr, opt.decay, opt.eps)?;
        Ok((stats, fake))
    }

    /// One critic update on the first `n_target` rows, followed by clipping.
    fn critic_step(
        &mut self,
        real: &Tensor,
        fake: &Tensor,
        n_target: usize,
        opt: &RmsProp,
        state: &mut [Tensor],
    ) -> Result<f64, AdError> {
        let tape = Tape::new();
        let crit = self.critic.leaves(&tape);
        let real = tape.constant(real.clone()).narrow(0, 0, n_target)?;
        let fake = tape.constant(fake.clone()).narrow(0, 0, n_target)?;
        let d_real = forward(&self.spec.critic, &crit, real)?;
        let d_fake = forward(&self.spec.critic, &crit, fake)?;
        let (loss, _) = critic_losses_var(d_real, d_fake, &self.weights)?;
        let grads = tape.backward(loss)?;
        let g: Vec<Tensor> = crit.iter().map(|&v| grads.wrt(v)).collect();
        rmsprop_step(&mut self.critic.tensors, &g, state, opt.lr, opt.decay, opt.eps)?;
        self.critic.clip(self.config.clip);
        Ok(loss.item())
    }
}

/// Initializes and trains a model on `data`.
pub fn train_pipeline(
    data: &Examples,
    spec: NetworkSpec,
    weights: LossWeights,
    config: TrainConfig,
) -> Result<VawGan, VawganError> {
    let mut gan = VawGan::init(spec, weights, config)?;
    gan.train(data)?;
    Ok(gan)
}

fn interpolated_log(f0: &F0Contour) -> Result<Vec<f64>, VawganError> {
    Ok(to_log(&interpolate_unvoiced(f0)?)?.into_values())
}

fn shared_classes(utts: &[LabeledUtterance]) -> Result<usize, VawganError> {
    let first = utts
        .first()
        .ok_or_else(|| VawganError::Data("no utterances".into()))?
        .emotion
        .n_classes();
    if utts.iter().any(|u| u.emotion.n_classes() != first) {
        return Err(VawganError::Data("utterances disagree on the emotion code width".into()));
    }
    Ok(first)
}

/// Spectral frames with the F0 of each frame as condition. Log-F0
/// statistics are pooled over all utterances unless given.
pub fn spectrum_examples(
    utts: &[LabeledUtterance],
    f0_stats: Option<NormStats>,
    mode: F0Condition,
) -> Result<(Examples, NormStats), VawganError> {
    let n_classes = shared_classes(utts)?;
    let dim = utts[0].features.dim();
    let mut logs = Vec::with_capacity(utts.len());
    for u in utts {
        if u.features.dim() != dim || u.features.n_frames() != u.f0.len() {
            return Err(VawganError::Shape(format!(
                "{}: {}x{} features with {} F0 frames, expected width {dim}",
                u.name,
                u.features.n_frames(),
                u.features.dim(),
                u.f0.len()
            )));
        }
        logs.push(interpolated_log(&u.f0)?);
    }
    let stats = match f0_stats {
        Some(s) => s,
        None => NormStats::from_log_values(&logs.concat())?,
    };
    let mut x = Vec::new();
    let mut labels = Vec::new();
    let mut cond = Vec::new();
    for (u, lg) in utts.iter().zip(&logs) {
        x.extend_from_slice(u.features.data());
        labels.extend(std::iter::repeat_n(u.emotion.index(), lg.len()));
        match mode {
            F0Condition::NormalizedLog => cond.extend(lg.iter().map(|v| (v - stats.mean) / stats.std)),
            F0Condition::Hz => cond.extend(lg.iter().map(|v| v.exp())),
        }
    }
    Ok((Examples::new(x, dim, labels, cond, 1, n_classes)?, stats))
}

/// Normalization state of the prosody pipeline: the wavelet grid, per-class
/// log-F0 statistics and per-scale coefficient statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsodyPrep {
    pub wavelet: WaveletConfig,
    pub emotion_f0: Vec<Option<NormStats>>,
    pub scale_mean: Vec<f64>,
    pub scale_std: Vec<f64>,
}

impl ProsodyPrep {
    pub fn class_stats(&self, emotion: EmotionCode) -> Result<NormStats, VawganError> {
        self.emotion_f0
            .get(emotion.index())
            .copied()
            .flatten()
            .ok_or_else(|| VawganError::State(format!("no F0 statistics for emotion {}", emotion.index())))
    }

    /// Per-scale standardized CWT frames `[T, n_scales]` of a contour,
    /// normalized with the statistics of `emotion`.
    pub fn scaleogram_frames(&self, f0: &F0Contour, emotion: EmotionCode) -> Result<Vec<f64>, VawganError> {
        self.scaleogram_frames_with(f0, self.class_stats(emotion)?)
    }

    /// [`Self::scaleogram_frames`] with explicit log-F0 statistics.
    pub fn scaleogram_frames_with(&self, f0: &F0Contour, stats: NormStats) -> Result<Vec<f64>, VawganError> {
        let raw = self.raw_frames(f0, stats)?;
        let s = self.scale_mean.len();
        Ok(raw
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.scale_mean[k % s]) / self.scale_std[k % s])
            .collect())
    }

    fn raw_frames(&self, f0: &F0Contour, stats: NormStats) -> Result<Vec<f64>, VawganError> {
        let log = to_log(&interpolate_unvoiced(f0)?)?;
        let norm = normalize_with(&log, stats)?;
        Ok(cwt_forward(&norm, &self.wavelet)?.to_frames())
    }

    /// Inverts [`Self::scaleogram_frames`] to a continuous contour in Hz
    /// using the statistics of `emotion`.
    pub fn frames_to_hz(&self, frames: &[f64], emotion: EmotionCode) -> Result<Vec<f64>, VawganError> {
        self.frames_to_hz_with(frames, self.class_stats(emotion)?)
    }

    pub fn frames_to_hz_with(&self, frames: &[f64], stats: NormStats) -> Result<Vec<f64>, VawganError> {
        let s = self.scale_mean.len();
        if frames.is_empty() || !frames.len().is_multiple_of(s) {
            return Err(VawganError::Shape(format!(
                "{} values do not form frames of {s} scales",
                frames.len()
            )));
        }
        let raw: Vec<f64> = frames
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.scale_std[k % s] + self.scale_mean[k % s])
            .collect();
        let sc = CwtScaleogram::from_frames(&raw, self.wavelet, frames.len() / s)?;
        let track = cwt_inverse(&sc)?;
        Ok(denormalize(&track, stats)?)
    }
}

/// Per-frame CWT coefficient vectors of log-F0 with no extra condition.
/// Log-F0 is standardized with the pooled statistics of each utterance's
/// emotion class, then every scale is standardized over the corpus.
pub fn prosody_examples(
    utts: &[LabeledUtterance],
    wavelet: WaveletConfig,
) -> Result<(Examples, ProsodyPrep), VawganError> {
    let n_classes = shared_classes(utts)?;
    wavelet.validate()?;
    let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); n_classes];
    for u in utts {
        per_class[u.emotion.index()].extend(interpolated_log(&u.f0)?);
    }
    let emotion_f0 = per_class
        .iter()
        .map(|v| if v.is_empty() { Ok(None) } else { NormStats::from_log_values(v).map(Some) })
        .collect::<Result<Vec<_>, _>>()?;
    let s = wavelet.n_scales;
    let mut prep = ProsodyPrep {
        wavelet,
        emotion_f0,
        scale_mean: vec![0.0; s],
        scale_std: vec![1.0; s],
    };
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for u in utts {
        let frames = prep.raw_frames(&u.f0, prep.class_stats(u.emotion)?)?;
        labels.extend(std::iter::repeat_n(u.emotion.index(), frames.len() / s));
        x.extend(frames);
    }
    let n = labels.len() as f64;
    for j in 0..s {
        let col = x.iter().skip(j).step_by(s);
        let mean = col.clone().sum::<f64>() / n;
        let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        prep.scale_mean[j] = mean;
        prep.scale_std[j] = var.sqrt().max(1e-8);
    }
    for (k, v) in x.iter_mut().enumerate() {
        *v = (*v - prep.scale_mean[k % s]) / prep.scale_std[k % s];
    }
    Ok((Examples::new(x, s, labels, Vec::new(), 0, n_classes)?, prep))
}
