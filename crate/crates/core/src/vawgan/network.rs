use serde::{Deserialize, Serialize};

use crate::autodiff::{AdError, Tape, Tensor, Var};
use crate::rng::SeededRng;

use super::VawganError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Valid,
    /// Zero padding so the output length is `ceil(L / stride)`.
    Same,
}

/// One layer of a feed-forward stack. Shapes exclude the batch axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    },
    /// Zero-insertion upsampling along time.
    Upsample {
        factor: usize,
    },
    LeakyRelu {
        slope: f64,
    },
    /// `[C * L] -> [C, L]`.
    Unflatten {
        channels: usize,
        length: usize,
    },
    /// `[C, L] -> [C * L]`.
    Flatten,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondDims {
    pub emotion: usize,
    pub f0: usize,
}

/// Encoder, decoder and critic stacks with their interface widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub input_dim: usize,
    pub latent_dim: usize,
    pub cond: CondDims,
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
    pub critic: Vec<Layer>,
}

const SLOPE: f64 = 0.2;

fn lrelu() -> Layer {
    Layer::LeakyRelu { slope: SLOPE }
}

fn dense(inputs: usize, outputs: usize) -> Layer {
    Layer::Dense { inputs, outputs }
}

fn conv(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Layer {
    Layer::Conv1d {
        in_channels,
        out_channels,
        kernel,
        stride,
        padding: Padding::Same,
    }
}

fn same_len(l: usize, stride: usize) -> usize {
    l.div_ceil(stride)
}

impl NetworkSpec {
    /// Small fully connected networks: `dim -> hidden -> 2 * latent` and back.
    pub fn dense(input_dim: usize, hidden: usize, latent_dim: usize, cond: CondDims) -> Self {
        let dec_in = latent_dim + cond.emotion + cond.f0;
        Self {
            name: "dense".into(),
            input_dim,
            latent_dim,
            cond,
            encoder: vec![dense(input_dim, hidden), lrelu(), dense(hidden, 2 * latent_dim)],
            decoder: vec![dense(dec_in, hidden), lrelu(), dense(hidden, input_dim)],
            critic: vec![dense(input_dim, hidden), lrelu(), dense(hidden, 1)],
        }
    }

    /// Default desk-scale preset: hidden width 64, latent 16.
    pub fn dense_default(input_dim: usize, cond: CondDims) -> Self {
        Self::dense(input_dim, 64, 16, cond)
    }

    /// Full-size convolutional networks over 513-dim frames with a 128-dim
    /// latent. Encoder: five stride-3 convolutions of width 7. Decoder:
    /// dense projection to 64 x 19, three upsample + conv stages with widths
    /// 9, 7, 7 and a final width-1025 convolution. Critic: stride-3
    /// convolutions of widths 7, 7, 115 and a dense score.
    pub fn full_scale(cond: CondDims) -> Self {
        let input_dim = 513;
        let latent_dim = 128;
        let mut encoder = vec![Layer::Unflatten {
            channels: 1,
            length: input_dim,
        }];
        let mut len = input_dim;
        let mut cin = 1;
        for cout in [16, 32, 64, 128, 256] {
            encoder.push(conv(cin, cout, 7, 3));
            encoder.push(lrelu());
            len = same_len(len, 3);
            cin = cout;
        }
        encoder.push(Layer::Flatten);
        encoder.push(dense(cin * len, 2 * latent_dim));

        let base_len = 19;
        let base_ch = 64;
        let mut decoder = vec![
            dense(latent_dim + cond.emotion + cond.f0, base_ch * base_len),
            lrelu(),
            Layer::Unflatten {
                channels: base_ch,
                length: base_len,
            },
        ];
        let mut cin = base_ch;
        for (kernel, cout) in [(9, 32), (7, 16), (7, 8)] {
            decoder.push(Layer::Upsample { factor: 3 });
            decoder.push(conv(cin, cout, kernel, 1));
            decoder.push(lrelu());
            cin = cout;
        }
        decoder.push(conv(cin, 1, 1025, 1));
        decoder.push(Layer::Flatten);

        let mut critic = vec![Layer::Unflatten {
            channels: 1,
            length: input_dim,
        }];
        let (mut len, mut cin) = (input_dim, 1);
        for (kernel, cout) in [(7, 16), (7, 32), (115, 64)] {
            critic.push(conv(cin, cout, kernel, 3));
            critic.push(lrelu());
            len = same_len(len, 3);
            cin = cout;
        }
        critic.push(Layer::Flatten);
        critic.push(dense(cin * len, 1));

        Self {
            name: "full_scale".into(),
            input_dim,
            latent_dim,
            cond,
            encoder,
            decoder,
            critic,
        }
    }

    pub fn decoder_input_dim(&self) -> usize {
        self.latent_dim + self.cond.emotion + self.cond.f0
    }

    /// Checks every stack maps its declared input width to its declared
    /// output width.
    pub fn validate(&self) -> Result<(), VawganError> {
        let check = |name: &str, layers: &[Layer], input: usize, output: usize| -> Result<(), VawganError> {
            let shape = output_shape(layers, &[input]).map_err(|e| VawganError::Shape(format!("{name}: {e}")))?;
            if shape != [output] {
                return Err(VawganError::Shape(format!(
                    "{name} maps [{input}] to {shape:?}, expected [{output}]"
                )));
            }
            Ok(())
        };
        if self.latent_dim == 0 || self.input_dim == 0 {
            return Err(VawganError::Config("input and latent widths must be positive".into()));
        }
        check("encoder", &self.encoder, self.input_dim, 2 * self.latent_dim)?;
        check("decoder", &self.decoder, self.decoder_input_dim(), self.input_dim)?;
        check("critic", &self.critic, self.input_dim, 1)
    }
}

/// Shape after one layer, batch axis excluded.
fn layer_shape(layer: &Layer, shape: &[usize]) -> Result<Vec<usize>, String> {
    let bad = || format!("{layer:?} cannot take input {shape:?}");
    match (*layer, shape) {
        (Layer::Dense { inputs, outputs }, &[n]) if n == inputs => Ok(vec![outputs]),
        (
            Layer::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            },
            &[c, l],
        ) if c == in_channels && kernel >= 1 && stride >= 1 => match padding {
            Padding::Same => Ok(vec![out_channels, same_len(l, stride)]),
            Padding::Valid if l >= kernel => Ok(vec![out_channels, (l - kernel) / stride + 1]),
            Padding::Valid => Err(bad()),
        },
        (Layer::Upsample { factor }, &[c, l]) if factor >= 1 => Ok(vec![c, l * factor]),
        (Layer::LeakyRelu { .. }, s) => Ok(s.to_vec()),
        (Layer::Unflatten { channels, length }, &[n]) if n == channels * length => Ok(vec![channels, length]),
        (Layer::Flatten, &[c, l]) => Ok(vec![c * l]),
        _ => Err(bad()),
    }
}

pub(crate) fn output_shape(layers: &[Layer], input: &[usize]) -> Result<Vec<usize>, String> {
    layers.iter().try_fold(input.to_vec(), |s, l| layer_shape(l, &s))
}

/// Trainable tensors of one stack, in layer order (weight then bias).
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub tensors: Vec<Tensor>,
}

impl Params {
    /// Uniform Glorot initialization with zero biases.
    pub fn init(layers: &[Layer], rng: &mut SeededRng) -> Self {
        let mut tensors = Vec::new();
        for layer in layers {
            let (wshape, fan_in, fan_out, bias) = match *layer {
                Layer::Dense { inputs, outputs } => (vec![inputs, outputs], inputs, outputs, outputs),
                Layer::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    ..
                } => (
                    vec![out_channels, in_channels, kernel],
                    in_channels * kernel,
                    out_channels * kernel,
                    out_channels,
                ),
                _ => continue,
            };
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            tensors.push(Tensor::from_fn(&wshape, |_| rng.uniform_range(-a, a)));
            tensors.push(Tensor::zeros(&[bias]));
        }
        Self { tensors }
    }

    pub fn n_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors.iter().fold(0.0, |m, t| m.max(t.max_abs()))
    }

    /// Clamps every value to `[-c, c]`.
    pub fn clip(&mut self, c: f64) {
        for t in &mut self.tensors {
            t.update(|_, v| v.clamp(-c, c));
        }
    }

    pub(crate) fn leaves<'t>(&self, tape: &'t Tape) -> Vec<Var<'t>> {
        self.tensors.iter().map(|t| tape.leaf(t.clone())).collect()
    }

    pub(crate) fn constants<'t>(&self, tape: &'t Tape) -> Vec<Var<'t>> {
        self.tensors.iter().map(|t| tape.constant(t.clone())).collect()
    }
}

/// Applies a stack to a `[N, F]` batch.
pub(crate) fn forward<'t>(layers: &[Layer], params: &[Var<'t>], x: Var<'t>) -> Result<Var<'t>, AdError> {
    let mut h = x;
    let mut p = params.iter();
    let mut next = || p.next().copied().expect("parameter count matches layers");
    for layer in layers {
        let batch = h.shape()[0];
        h = match *layer {
            Layer::Dense { .. } => {
                let (w, b) = (next(), next());
                h.matmul(w)?.add_bias(b)?
            }
            Layer::Conv1d {
                kernel,
                stride,
                padding,
                ..
            } => {
                let (w, b) = (next(), next());
                let input = match padding {
                    Padding::Valid => h,
                    Padding::Same => {
                        let l = h.shape()[2];
                        let total = ((same_len(l, stride) - 1) * stride + kernel).saturating_sub(l);
                        h.pad1d(total / 2, total - total / 2)?
                    }
                };
                input.conv1d(w, Some(b), stride)?
            }
            Layer::Upsample { factor } => h.upsample1d(factor)?,
            Layer::LeakyRelu { slope } => h.leaky_relu(slope)?,
            Layer::Unflatten { channels, length } => h.reshape(&[batch, channels, length])?,
            Layer::Flatten => {
                let s = h.shape();
                h.reshape(&[batch, s[1] * s[2]])?
            }
        };
    }
    Ok(h)
}
