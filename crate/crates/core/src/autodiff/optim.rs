use serde::{Deserialize, Serialize};

use crate::scalar::Real;

use super::{AdError, Tensor};

/// RMSProp hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            decay: 0.9,
            eps: 1e-8,
        }
    }
}

impl RmsProp {
    /// Zeroed mean-square state matching `params`.
    pub fn init_state<T: Real>(params: &[Tensor<T>]) -> Vec<Tensor<T>> {
        params.iter().map(|p| Tensor::zeros(p.shape())).collect()
    }

    pub fn step<T: Real>(&self, params: &mut [Tensor<T>], grads: &[Tensor<T>], state: &mut [Tensor<T>]) -> Result<(), AdError> {
        rmsprop_step(params, grads, state, T::lit(self.lr), T::lit(self.decay), T::lit(self.eps))
    }
}

/// One RMSProp update:
/// `state = decay * state + (1 - decay) * g^2`,
/// `param -= lr * g / (sqrt(state) + eps)`.
pub fn rmsprop_step<T: Real>(
    params: &mut [Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut [Tensor<T>],
    lr: T,
    decay: T,
    eps: T,
) -> Result<(), AdError> {
    if params.len() != grads.len() || params.len() != state.len() {
        return Err(AdError::Shape {
            op: "rmsprop",
            detail: format!("{} params, {} grads, {} states", params.len(), grads.len(), state.len()),
        });
    }
    for ((p, g), s) in params.iter().zip(grads).zip(state.iter()) {
        if p.shape() != g.shape() || p.shape() != s.shape() {
            return Err(AdError::Shape {
                op: "rmsprop",
                detail: format!("param {:?}, grad {:?}, state {:?}", p.shape(), g.shape(), s.shape()),
            });
        }
    }
    let keep = T::one() - decay;
    for ((p, g), s) in params.iter_mut().zip(grads).zip(state.iter_mut()) {
        s.update(|i, v| decay * v + keep * g.data()[i] * g.data()[i]);
        let sv = s.data();
        p.update(|i, v| v - lr * g.data()[i] / (sv[i].sqrt() + eps));
    }
    Ok(())
}
