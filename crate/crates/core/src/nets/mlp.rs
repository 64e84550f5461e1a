use rand::Rng;

use super::init::{glorot, zeros};
use crate::numcore::{Backend, Param, Parameterized};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply<B: Backend>(self, b: &mut B, x: &B::T) -> B::T {
        match self {
            Activation::Relu => b.relu(x),
            Activation::Tanh => b.tanh(x),
            Activation::Identity => x.clone(),
        }
    }
}

/// Affine map `x · W + bias` with `W` stored `[in, out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, input: usize, output: usize) -> Self {
        Self { weight: glorot(rng, input, output), bias: zeros(&[output]) }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward<B: Backend>(&self, b: &mut B, x: &B::T) -> Result<B::T> {
        let w = b.param(&self.weight);
        let bias = b.param(&self.bias);
        let h = b.matmul(x, &w)?;
        b.add_bias(&h, &bias)
    }
}

/// Stack of affine layers, each followed by its activation.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<(Linear, Activation)>,
}

impl MlpParams {
    pub fn new(layers: Vec<(Linear, Activation)>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Invalid("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].0.output_dim() != pair[1].0.input_dim() {
                return Err(Error::shape(
                    "mlp",
                    format!("layer widths {} -> {} do not chain", pair[0].0.output_dim(), pair[1].0.input_dim()),
                ));
            }
        }
        Ok(Self { layers })
    }

    /// Builds `widths[0] → widths[1] → … → widths[n]`; hidden layers use
    /// `hidden`, the last layer uses `last`.
    pub fn build<R: Rng + ?Sized>(rng: &mut R, widths: &[usize], hidden: Activation, last: Activation) -> Self {
        assert!(widths.len() >= 2, "need input and output widths");
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { last } else { hidden };
                (Linear::new(rng, widths[i], widths[i + 1]), act)
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].0.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").0.output_dim()
    }

    pub fn forward<B: Backend>(&self, b: &mut B, x: &B::T) -> Result<B::T> {
        if b.value(x).cols() != self.input_dim() {
            return Err(Error::shape(
                "mlp_forward",
                format!("input width {} but first layer expects {}", b.value(x).cols(), self.input_dim()),
            ));
        }
        let mut h = x.clone();
        for (layer, act) in &self.layers {
            let z = layer.forward(b, &h)?;
            h = act.apply(b, &z);
        }
        Ok(h)
    }
}

impl Parameterized for Linear {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

impl Parameterized for MlpParams {
    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|(l, _)| l.params()).collect()
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|(l, _)| l.params_mut()).collect()
    }
}
