//! Seeded weight initialization.
//!
//! All randomness comes from ChaCha8 streams seeded with a `u64`, so a
//! seed fixes every initial weight and every shuffle order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::Tensor;
use crate::scalar::Scalar;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in `[-limit, limit)`.
pub fn uniform<T: Scalar>(rng: &mut SeededRng, shape: &[usize], limit: f64) -> Tensor<T> {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = T::lit(rng.gen_range(-limit..limit));
    }
    t
}

/// Glorot (Xavier) uniform: limit `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar>(rng: &mut SeededRng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(rng, shape, limit)
}
