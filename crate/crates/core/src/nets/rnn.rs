use rand::Rng;

use super::init::{glorot, zeros};
use crate::numcore::{Backend, Param, Parameterized, Tensor};
use crate::{Error, Result};

/// Plain tanh recurrence `s_t = tanh(x_t·U + s_{t-1}·W + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnParams {
    /// Input-to-hidden weight, `[input, hidden]`.
    pub input_weight: Param,
    /// Hidden-to-hidden weight, `[hidden, hidden]`.
    pub hidden_weight: Param,
    pub bias: Param,
}

impl RnnParams {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, input: usize, hidden: usize) -> Self {
        Self { input_weight: glorot(rng, input, hidden), hidden_weight: glorot(rng, hidden, hidden), bias: zeros(&[hidden]) }
    }

    pub fn input_dim(&self) -> usize {
        self.input_weight.shape()[0]
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_weight.shape()[0]
    }

    /// One recurrence step on a `[B, input]` batch with `[B, hidden]` state.
    pub fn step<B: Backend>(&self, b: &mut B, h_prev: &B::T, x: &B::T) -> Result<B::T> {
        let (xs, hs) = (b.value(x).shape().to_vec(), b.value(h_prev).shape().to_vec());
        if xs.len() != 2 || hs.len() != 2 || xs[1] != self.input_dim() || hs[1] != self.hidden_dim() || xs[0] != hs[0] {
            return Err(Error::shape(
                "rnn_step",
                format!("x {xs:?}, h {hs:?} for U {:?}, W {:?}", self.input_weight.shape(), self.hidden_weight.shape()),
            ));
        }
        let u = b.param(&self.input_weight);
        let w = b.param(&self.hidden_weight);
        let bias = b.param(&self.bias);
        let from_input = b.matmul(x, &u)?;
        let from_state = b.matmul(h_prev, &w)?;
        let z = b.add(&from_input, &from_state)?;
        let z = b.add_bias(&z, &bias)?;
        Ok(b.tanh(&z))
    }

    /// Runs the recurrence over an ordered window of `[B, input]` steps from a
    /// zero initial state, returning every intermediate state.
    ///
    /// Applied to step-level hidden states this yields the recursive position
    /// codes `p_{i+1} = RNN(h_i, p_i)`, `p_0 = 0`; state `i` only depends on
    /// window entries `≤ i`.
    pub fn run<B: Backend>(&self, b: &mut B, window: &[B::T]) -> Result<Vec<B::T>> {
        let first = window.first().ok_or_else(|| Error::Invalid("empty window".into()))?;
        let rows = b.value(first).shape()[0];
        let mut state = b.constant(Tensor::zeros(&[rows, self.hidden_dim()]));
        let mut out = Vec::with_capacity(window.len());
        for x in window {
            state = self.step(b, &state, x)?;
            out.push(state.clone());
        }
        Ok(out)
    }

    /// Alias of [`RnnParams::run`] under its position-code name.
    pub fn position_encode<B: Backend>(&self, b: &mut B, window: &[B::T]) -> Result<Vec<B::T>> {
        self.run(b, window)
    }
}

impl Parameterized for RnnParams {
    fn params(&self) -> Vec<&Param> {
        vec![&self.input_weight, &self.hidden_weight, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.input_weight, &mut self.hidden_weight, &mut self.bias]
    }
}
