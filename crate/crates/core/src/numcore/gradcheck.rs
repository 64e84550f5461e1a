//! Central finite-difference gradients, used as an oracle for the tape.
//!
//! Only forward evaluation is used here, so the estimates are independent of
//! the reverse-mode rules they are compared against.

use super::{Parameterized, Tape, Tensor, Var};

/// Central-difference gradient of `f` with respect to each input tensor.
pub fn numeric_gradient(inputs: &[Tensor], step: f64, mut f: impl FnMut(&[Tensor]) -> f64) -> Vec<Tensor> {
    let mut work: Vec<Tensor> = inputs.to_vec();
    let mut grads = Vec::with_capacity(inputs.len());
    for t in 0..inputs.len() {
        let mut g = Tensor::zeros(inputs[t].shape());
        for i in 0..inputs[t].len() {
            let orig = work[t].data()[i];
            work[t].data_mut()[i] = orig + step;
            let plus = f(&work);
            work[t].data_mut()[i] = orig - step;
            let minus = f(&work);
            work[t].data_mut()[i] = orig;
            g.data_mut()[i] = (plus - minus) / (2.0 * step);
        }
        grads.push(g);
    }
    grads
}

/// Largest relative error between two gradient sets, with the usual
/// `|a - n| / max(|a|, |n|, floor)` normalization.
pub fn max_relative_error(analytic: &[Tensor], numeric: &[Tensor], floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), n.shape());
        for (&x, &y) in a.data().iter().zip(n.data()) {
            let denom = x.abs().max(y.abs()).max(floor);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}

/// Largest relative error between reverse-mode gradients of a scalar loss
/// with respect to every parameter of `net` and central differences.
///
/// `eager` and `taped` must evaluate the same loss; the first is used for
/// the finite differences, the second for the tape.
pub fn check_params<N, E, T>(net: &N, step: f64, floor: f64, eager: E, taped: T) -> crate::Result<f64>
where
    N: Parameterized + Clone,
    E: Fn(&N) -> crate::Result<f64>,
    T: Fn(&N, &mut Tape) -> crate::Result<Var>,
{
    let mut tape = Tape::new();
    let loss = taped(net, &mut tape)?;
    let grads = tape.backward(&loss)?;
    let analytic: Vec<Tensor> = net.params().iter().map(|p| grads.param_or_zeros(p)).collect();

    let mut work = net.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    for pi in 0..analytic.len() {
        let len = analytic[pi].len();
        let mut g = Tensor::zeros(analytic[pi].shape());
        for i in 0..len {
            let orig = work.params()[pi].value.data()[i];
            work.params_mut()[pi].value.data_mut()[i] = orig + step;
            let plus = eager(&work)?;
            work.params_mut()[pi].value.data_mut()[i] = orig - step;
            let minus = eager(&work)?;
            work.params_mut()[pi].value.data_mut()[i] = orig;
            g.data_mut()[i] = (plus - minus) / (2.0 * step);
        }
        numeric.push(g);
    }
    Ok(max_relative_error(&analytic, &numeric, floor))
}
