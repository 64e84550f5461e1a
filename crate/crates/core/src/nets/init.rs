use rand::Rng;

use crate::numcore::{Param, Tensor};

/// Glorot-uniform `[fan_in, fan_out]` weight.
pub fn glorot<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Param {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Param::new(Tensor::from_fn(&[fan_in, fan_out], |_| rng.random_range(-limit..limit)))
}

pub fn zeros(shape: &[usize]) -> Param {
    Param::new(Tensor::zeros(shape))
}
