//! Bias-corrected Adam over [`ModelParams`].

use crate::error::{Error, Result};
use crate::network::ModelParams;
use crate::scalar::Scalar;

/// First/second moment estimates mirroring the model arrays, plus the step
/// counter used for bias correction.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    m: ModelParams<T>,
    v: ModelParams<T>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(band_width: usize, hidden: usize) -> Self {
        AdamState {
            m: ModelParams::zeros(band_width, hidden),
            v: ModelParams::zeros(band_width, hidden),
            t: 0,
        }
    }

    #[inline]
    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One elementwise Adam update:
/// `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`,
/// `p ← p − lr · (m / (1−β₁ᵗ)) / (√(v / (1−β₂ᵗ)) + ε)`.
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut AdamState<T>,
    lr: T,
    beta1: T,
    beta2: T,
    epsilon: T,
) -> Result<()> {
    if params.band_width() != grads.band_width() || params.hidden() != grads.hidden() {
        return Err(Error::shape(
            "gradient shapes do not mirror the parameters",
        ));
    }
    if lr <= T::zero() {
        return Err(Error::invalid("learning rate must be positive"));
    }
    if !grads.all_finite() {
        return Err(Error::Diverged("nonfinite gradient".into()));
    }

    state.t += 1;
    let t = state.t as i32;
    let bc1 = T::one() - beta1.powi(t);
    let bc2 = T::one() - beta2.powi(t);
    let one = T::one();

    for (((p, g), m), v) in params
        .flat_mut()
        .into_iter()
        .zip(grads.flat())
        .zip(state.m.flat_mut())
        .zip(state.v.flat_mut())
    {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = beta1 * m[i] + (one - beta1) * gi;
            v[i] = beta2 * v[i] + (one - beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}
