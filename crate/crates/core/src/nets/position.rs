use crate::numcore::Tensor;
use crate::{Error, Result};

/// Sinusoidal embedding of a position: `e[2i] = sin(p / 10000^(2i/d))`,
/// `e[2i+1] = cos(p / 10000^(2i/d))`.
pub fn sinusoidal_pe(pos: u64, width: usize) -> Result<Tensor> {
    if width == 0 || !width.is_multiple_of(2) {
        return Err(Error::Invalid(format!("sinusoidal width must be even and positive, got {width}")));
    }
    let p = pos as f64;
    let mut out = vec![0.0; width];
    for i in 0..width / 2 {
        let angle = p / 10000f64.powf((2 * i) as f64 / width as f64);
        out[2 * i] = angle.sin();
        out[2 * i + 1] = angle.cos();
    }
    Ok(Tensor::vector(out))
}
