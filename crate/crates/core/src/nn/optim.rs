//! Adam with bias correction.

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 0.01, beta1: 0.9, beta2: 0.999, epsilon: 1e-7 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub first_moment: Vec<Tensor<T>>,
    pub second_moment: Vec<Tensor<T>>,
}

/// One Adam update of every parameter tensor.
///
/// Moments are allocated on the first call from the parameter shapes.
pub fn optimizer_step<T: Scalar>(
    params: &mut [&mut Tensor<T>],
    grads: &[&Tensor<T>],
    state: &mut AdamState<T>,
    config: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::LengthMismatch { what: "parameters and gradients", left: params.len(), right: grads.len() });
    }
    for (p, g) in params.iter().zip(grads) {
        g.expect_shape(p.shape(), "gradient")?;
    }
    if state.first_moment.is_empty() {
        state.first_moment = params.iter().map(|p| p.zeros_like()).collect();
        state.second_moment = params.iter().map(|p| p.zeros_like()).collect();
    } else if state.first_moment.len() != params.len() {
        return Err(Error::LengthMismatch {
            what: "optimizer state and parameters",
            left: state.first_moment.len(),
            right: params.len(),
        });
    }

    state.step += 1;
    let t = state.step as f64;
    let correction1 = T::lit(1.0 - config.beta1.powf(t));
    let correction2 = T::lit(1.0 - config.beta2.powf(t));
    let (b1, b2) = (T::lit(config.beta1), T::lit(config.beta2));
    let (lr, eps) = (T::lit(config.learning_rate), T::lit(config.epsilon));

    for ((param, grad), (m, v)) in
        params.iter_mut().zip(grads).zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        m.expect_shape(param.shape(), "first moment")?;
        let values = param.data_mut().iter_mut();
        let moments = m.data_mut().iter_mut().zip(v.data_mut().iter_mut());
        for ((theta, &g), (m, v)) in values.zip(grad.data()).zip(moments) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
