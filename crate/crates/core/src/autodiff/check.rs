use crate::scalar::Real;

use super::{AdError, Tape, Tensor, Var};

/// Central-difference check of a scalar function of one tensor. Returns
/// `max_i |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|)`.
pub fn grad_check<T, F>(f: F, x: &Tensor<T>, eps: T) -> Result<T, AdError>
where
    T: Real,
    F: for<'t> Fn(&'t Tape<T>, Var<'t, T>) -> Result<Var<'t, T>, AdError>,
{
    grad_check_many(|tape, vars| f(tape, vars[0]), std::slice::from_ref(x), eps)
}

/// [`grad_check`] over several input tensors at once.
pub fn grad_check_many<T, F>(f: F, inputs: &[Tensor<T>], eps: T) -> Result<T, AdError>
where
    T: Real,
    F: for<'t> Fn(&'t Tape<T>, &[Var<'t, T>]) -> Result<Var<'t, T>, AdError>,
{
    let analytic: Vec<Tensor<T>> = {
        let tape = Tape::new();
        let vars: Vec<Var<'_, T>> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let loss = f(&tape, &vars)?;
        let grads = tape.backward(loss)?;
        vars.iter().map(|&v| grads.wrt(v)).collect()
    };
    let eval = |probe: &[Tensor<T>]| -> Result<T, AdError> {
        let tape = Tape::new();
        let vars: Vec<Var<'_, T>> = probe.iter().map(|t| tape.constant(t.clone())).collect();
        Ok(f(&tape, &vars)?.item())
    };
    let floor = T::lit(1e-8);
    let mut worst = T::zero();
    let mut probe: Vec<Tensor<T>> = inputs.to_vec();
    for (k, input) in inputs.iter().enumerate() {
        for i in 0..input.len() {
            let x0 = input.data()[i];
            probe[k].update(|j, v| if j == i { x0 + eps } else { v });
            let up = eval(&probe)?;
            probe[k].update(|j, v| if j == i { x0 - eps } else { v });
            let down = eval(&probe)?;
            probe[k].update(|j, v| if j == i { x0 } else { v });
            let fd = (up - down) / (T::lit(2.0) * eps);
            let ad = analytic[k].data()[i];
            let rel = (ad - fd).abs() / floor.max(ad.abs() + fd.abs());
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
