use super::{ops, Param, Tensor};
use crate::Result;

/// The primitive set every network is written against.
///
/// [`Eager`] evaluates immediately on plain tensors; [`Tape`](super::Tape)
/// additionally records each step for reverse-mode differentiation. Network
/// code is generic over the backend so both paths share one definition.
pub trait Backend {
    type T: Clone;

    /// Binds a trainable parameter (tracked on a tape unless frozen).
    fn param(&mut self, p: &Param) -> Self::T;
    /// Binds a value that never receives gradient.
    fn constant(&mut self, t: Tensor) -> Self::T;
    fn value<'a>(&'a self, x: &'a Self::T) -> &'a Tensor;

    fn matmul(&mut self, a: &Self::T, b: &Self::T) -> Result<Self::T>;
    fn bmm(&mut self, a: &Self::T, b: &Self::T, trans_b: bool) -> Result<Self::T>;
    fn add(&mut self, a: &Self::T, b: &Self::T) -> Result<Self::T>;
    fn sub(&mut self, a: &Self::T, b: &Self::T) -> Result<Self::T>;
    fn mul(&mut self, a: &Self::T, b: &Self::T) -> Result<Self::T>;
    fn add_bias(&mut self, x: &Self::T, bias: &Self::T) -> Result<Self::T>;
    fn scale(&mut self, x: &Self::T, c: f64) -> Self::T;
    fn tanh(&mut self, x: &Self::T) -> Self::T;
    fn relu(&mut self, x: &Self::T) -> Self::T;
    fn exp(&mut self, x: &Self::T) -> Self::T;
    fn softmax(&mut self, x: &Self::T, axis: usize) -> Result<Self::T>;
    fn layer_norm(&mut self, x: &Self::T, gain: &Self::T, bias: &Self::T, eps: f64) -> Result<Self::T>;
    fn reshape(&mut self, x: &Self::T, shape: &[usize]) -> Result<Self::T>;
    fn transpose01(&mut self, x: &Self::T) -> Result<Self::T>;
    fn concat_cols(&mut self, parts: &[&Self::T]) -> Result<Self::T>;
    fn slice_cols(&mut self, x: &Self::T, start: usize, width: usize) -> Result<Self::T>;
    fn concat_rows(&mut self, parts: &[&Self::T]) -> Result<Self::T>;
    fn slice_rows(&mut self, x: &Self::T, start: usize, len: usize) -> Result<Self::T>;
    fn select_rows(&mut self, x: &Self::T, idx: &[usize]) -> Result<Self::T>;
    fn sum_all(&mut self, x: &Self::T) -> Self::T;
    fn mean_all(&mut self, x: &Self::T) -> Self::T;
}

/// Untracked evaluation on plain tensors.
#[derive(Clone, Copy, Debug, Default)]
pub struct Eager;

impl Backend for Eager {
    type T = Tensor;

    fn param(&mut self, p: &Param) -> Tensor {
        p.value.clone()
    }
    fn constant(&mut self, t: Tensor) -> Tensor {
        t
    }
    fn value<'a>(&'a self, x: &'a Tensor) -> &'a Tensor {
        x
    }
    fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        ops::matmul(a, b)
    }
    fn bmm(&mut self, a: &Tensor, b: &Tensor, trans_b: bool) -> Result<Tensor> {
        ops::bmm(a, b, trans_b)
    }
    fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        ops::add(a, b)
    }
    fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        ops::sub(a, b)
    }
    fn mul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        ops::mul(a, b)
    }
    fn add_bias(&mut self, x: &Tensor, bias: &Tensor) -> Result<Tensor> {
        ops::add_bias(x, bias)
    }
    fn scale(&mut self, x: &Tensor, c: f64) -> Tensor {
        ops::scale(x, c)
    }
    fn tanh(&mut self, x: &Tensor) -> Tensor {
        ops::tanh(x)
    }
    fn relu(&mut self, x: &Tensor) -> Tensor {
        ops::relu(x)
    }
    fn exp(&mut self, x: &Tensor) -> Tensor {
        ops::exp(x)
    }
    fn softmax(&mut self, x: &Tensor, axis: usize) -> Result<Tensor> {
        ops::softmax(x, axis)
    }
    fn layer_norm(&mut self, x: &Tensor, gain: &Tensor, bias: &Tensor, eps: f64) -> Result<Tensor> {
        ops::layer_norm(x, gain, bias, eps).map(|(y, _, _)| y)
    }
    fn reshape(&mut self, x: &Tensor, shape: &[usize]) -> Result<Tensor> {
        ops::reshape(x, shape)
    }
    fn transpose01(&mut self, x: &Tensor) -> Result<Tensor> {
        ops::transpose01(x)
    }
    fn concat_cols(&mut self, parts: &[&Tensor]) -> Result<Tensor> {
        ops::concat_cols(parts)
    }
    fn slice_cols(&mut self, x: &Tensor, start: usize, width: usize) -> Result<Tensor> {
        ops::slice_cols(x, start, width)
    }
    fn concat_rows(&mut self, parts: &[&Tensor]) -> Result<Tensor> {
        ops::concat_rows(parts)
    }
    fn slice_rows(&mut self, x: &Tensor, start: usize, len: usize) -> Result<Tensor> {
        ops::slice_rows(x, start, len)
    }
    fn select_rows(&mut self, x: &Tensor, idx: &[usize]) -> Result<Tensor> {
        ops::select_rows(x, idx)
    }
    fn sum_all(&mut self, x: &Tensor) -> Tensor {
        ops::sum_all(x)
    }
    fn mean_all(&mut self, x: &Tensor) -> Tensor {
        ops::mean_all(x)
    }
}
