//! Emotional voice conversion toolkit: feature I/O, F0 preprocessing,
//! continuous wavelet analysis of prosody, objective metrics, a small
//! reverse-mode autodiff engine and a VAW-GAN conversion model.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

// Fallible tape ops keep arithmetic names; negated comparisons also reject NaN.
#![allow(clippy::should_implement_trait, clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod cwt;
pub mod f0prep;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod vawgan;

pub use rng::SeededRng;
pub use scalar::Real;

pub type FeatureSequence = io::FeatureSequence<f64>;
pub type F0Contour = io::F0Contour<f64>;
pub type LogF0Track = f0prep::LogF0Track<f64>;
pub type CwtScaleogram = cwt::CwtScaleogram<f64>;
pub type Tensor = autodiff::Tensor<f64>;
pub type Tape = autodiff::Tape<f64>;

pub type FeatureSequence32 = io::FeatureSequence<f32>;
pub type CwtScaleogram32 = cwt::CwtScaleogram<f32>;
pub type Tensor32 = autodiff::Tensor<f32>;
