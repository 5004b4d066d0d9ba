use serde::{Deserialize, Serialize};

use crate::autodiff::{AdError, Tensor, Var};
use crate::rng::SeededRng;

use super::VawganError;

/// Diagonal Gaussian `q(z|x)` given by mean and log-variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    mean: Vec<f64>,
    log_var: Vec<f64>,
}

impl GaussianPosterior {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self, VawganError> {
        if mean.len() != log_var.len() {
            return Err(VawganError::Shape(format!(
                "posterior mean has {} dims, log_var {}",
                mean.len(),
                log_var.len()
            )));
        }
        if mean.iter().chain(&log_var).any(|v| !v.is_finite()) {
            return Err(VawganError::Data("posterior parameters must be finite".into()));
        }
        Ok(Self { mean, log_var })
    }

    /// `N(0, I)` in `dim` dimensions.
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            log_var: vec![0.0; dim],
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn log_var(&self) -> &[f64] {
        &self.log_var
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    /// Weight of the adversarial term.
    pub alpha: f64,
    pub recon_weight: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            recon_weight: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), VawganError> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) || !(self.recon_weight > 0.0 && self.recon_weight.is_finite()) {
            return Err(VawganError::Config(format!(
                "need alpha >= 0 and recon_weight > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `KL(q || N(0, I)) = 0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2)`.
pub fn kl_to_standard_normal(post: &GaussianPosterior) -> f64 {
    0.5 * post
        .mean
        .iter()
        .zip(&post.log_var)
        .map(|(&m, &lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

/// Summed KL over every element of `mean` / `log_var`.
pub fn kl_term<'t>(mean: Var<'t>, log_var: Var<'t>) -> Result<Var<'t>, AdError> {
    mean.square()?
        .add(log_var.exp()?)?
        .sub(log_var)?
        .add_scalar(-1.0)?
        .sum()?
        .scale(0.5)
}

/// `z = mu + sigma * eps` with `eps ~ N(0, I)` drawn from `rng`.
pub fn reparameterize(post: &GaussianPosterior, rng: &mut SeededRng) -> Vec<f64> {
    post.mean
        .iter()
        .zip(&post.log_var)
        .map(|(&m, &lv)| m + (0.5 * lv).exp() * rng.normal())
        .collect()
}

/// Differentiable counterpart of [`reparameterize`] with the noise supplied.
pub fn reparameterize_var<'t>(mean: Var<'t>, log_var: Var<'t>, eps: Tensor) -> Result<Var<'t>, AdError> {
    if eps.shape() != mean.shape().as_slice() {
        return Err(AdError::Shape {
            op: "reparameterize",
            detail: format!("{:?} vs {:?}", mean.shape(), eps.shape()),
        });
    }
    let noise = mean.tape().constant(eps);
    mean.add(log_var.scale(0.5)?.exp()?.mul(noise)?)
}

/// `KL + recon_weight * mse(x, recon)` for one frame.
pub fn vae_objective(x: &[f64], recon: &[f64], post: &GaussianPosterior, w: &LossWeights) -> Result<f64, VawganError> {
    if x.len() != recon.len() || x.is_empty() {
        return Err(VawganError::Shape(format!(
            "frame has {} values, reconstruction {}",
            x.len(),
            recon.len()
        )));
    }
    let mse = x.iter().zip(recon).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
    Ok(kl_to_standard_normal(post) + w.recon_weight * mse)
}

/// Batched objective: KL summed over latent dims and averaged over rows,
/// plus `recon_weight` times the mean squared error over all elements.
/// Returns `(loss, kl, mse)`.
pub fn vae_objective_var<'t>(
    x: Var<'t>,
    recon: Var<'t>,
    mean: Var<'t>,
    log_var: Var<'t>,
    w: &LossWeights,
) -> Result<(Var<'t>, Var<'t>, Var<'t>), AdError> {
    let rows = match mean.shape().as_slice() {
        [n, _] => *n,
        _ => 1,
    };
    let kl = kl_term(mean, log_var)?.scale(1.0 / rows as f64)?;
    let mse = x.sub(recon)?.square()?.mean()?;
    let loss = kl.add(mse.scale(w.recon_weight)?)?;
    Ok((loss, kl, mse))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticLosses {
    pub critic: f64,
    pub gen_adv: f64,
}

/// Wasserstein terms: the critic minimizes `-(E[D(real)] - E[D(fake)])`,
/// the generator minimizes `-alpha * E[D(fake)]`.
pub fn critic_losses(d_real: &[f64], d_fake: &[f64], w: &LossWeights) -> Result<CriticLosses, VawganError> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(VawganError::Shape("critic batch is empty".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let fake = mean(d_fake);
    Ok(CriticLosses {
        critic: -(mean(d_real) - fake),
        gen_adv: -w.alpha * fake,
    })
}

/// Tape version of [`critic_losses`]; returns `(critic, gen_adv)`.
pub fn critic_losses_var<'t>(d_real: Var<'t>, d_fake: Var<'t>, w: &LossWeights) -> Result<(Var<'t>, Var<'t>), AdError> {
    let fake = d_fake.mean()?;
    let critic = d_real.mean()?.sub(fake)?.neg()?;
    let gen_adv = fake.scale(-w.alpha)?;
    Ok((critic, gen_adv))
}
