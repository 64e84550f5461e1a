//! Forward definitions of every primitive, on plain tensors.

use super::kernels;
use super::Tensor;
use crate::{Error, Result};

fn expect_2d(t: &Tensor, op: &'static str) -> Result<(usize, usize)> {
    match *t.shape() {
        [r, c] => Ok((r, c)),
        _ => Err(Error::shape(op, format!("expected a matrix, got {:?}", t.shape()))),
    }
}

fn expect_3d(t: &Tensor, op: &'static str) -> Result<(usize, usize, usize)> {
    match *t.shape() {
        [b, r, c] => Ok((b, r, c)),
        _ => Err(Error::shape(op, format!("expected rank 3, got {:?}", t.shape()))),
    }
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = expect_2d(a, "matmul")?;
    let (k2, n) = expect_2d(b, "matmul")?;
    if k != k2 {
        return Err(Error::shape("matmul", format!("{:?} · {:?}", a.shape(), b.shape())));
    }
    Tensor::new(&[m, n], kernels::matmul(a.data(), b.data(), m, k, n))
}

/// Batched product `a[B,m,k] · b[B,k,n]`, or `a · bᵀ` with `b[B,n,k]` when `trans_b`.
pub fn bmm(a: &Tensor, b: &Tensor, trans_b: bool) -> Result<Tensor> {
    let (batch, m, k) = expect_3d(a, "bmm")?;
    let (batch2, r, c) = expect_3d(b, "bmm")?;
    let (k2, n) = if trans_b { (c, r) } else { (r, c) };
    if batch != batch2 || k != k2 {
        return Err(Error::shape(
            "bmm",
            format!("{:?} · {:?} (trans_b={trans_b})", a.shape(), b.shape()),
        ));
    }
    let out = if trans_b {
        let bt = kernels::batch_transpose(b.data(), batch, r, c);
        kernels::bmm(a.data(), &bt, batch, m, k, n)
    } else {
        kernels::bmm(a.data(), b.data(), batch, m, k, n)
    };
    Tensor::new(&[batch, m, n], out)
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.zip_map(b, "add", |x, y| x + y)
}

pub fn sub(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.zip_map(b, "sub", |x, y| x - y)
}

pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.zip_map(b, "mul", |x, y| x * y)
}

/// Adds `bias` (extent = last extent of `x`) to every row of `x`.
pub fn add_bias(x: &Tensor, bias: &Tensor) -> Result<Tensor> {
    if bias.ndim() != 1 || bias.len() != x.cols() {
        return Err(Error::shape("add_bias", format!("{:?} + {:?}", x.shape(), bias.shape())));
    }
    let c = x.cols();
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(c) {
        for (o, b) in row.iter_mut().zip(bias.data()) {
            *o += b;
        }
    }
    Ok(out)
}

pub fn scale(x: &Tensor, c: f64) -> Tensor {
    x.map(|v| v * c)
}

pub fn tanh(x: &Tensor) -> Tensor {
    x.map(f64::tanh)
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

pub fn exp(x: &Tensor) -> Tensor {
    x.map(f64::exp)
}

pub fn softmax(x: &Tensor, axis: usize) -> Result<Tensor> {
    if axis >= x.ndim() {
        return Err(Error::shape("softmax", format!("axis {axis} out of range for {:?}", x.shape())));
    }
    let (outer, len, inner) = kernels::axis_split(x.shape(), axis);
    Tensor::new(x.shape(), kernels::softmax(x.data(), outer, len, inner))
}

/// Layer normalization over the last axis. Also returns the standardized
/// rows and inverse deviations needed by the backward pass.
pub fn layer_norm(
    x: &Tensor,
    gain: &Tensor,
    bias: &Tensor,
    eps: f64,
) -> Result<(Tensor, Vec<f64>, Vec<f64>)> {
    let cols = x.cols();
    if gain.shape() != [cols] || bias.shape() != [cols] {
        return Err(Error::shape(
            "layer_norm",
            format!("x {:?}, gain {:?}, bias {:?}", x.shape(), gain.shape(), bias.shape()),
        ));
    }
    let rows = x.rows();
    let (xhat, inv_std) = kernels::standardize(x.data(), rows, cols, eps);
    let mut out = xhat.clone();
    for row in out.chunks_mut(cols) {
        for ((o, g), b) in row.iter_mut().zip(gain.data()).zip(bias.data()) {
            *o = *o * g + b;
        }
    }
    Ok((Tensor::new(x.shape(), out)?, xhat, inv_std))
}

pub fn reshape(x: &Tensor, shape: &[usize]) -> Result<Tensor> {
    x.clone().reshape(shape)
}

/// Swaps the first two axes of a rank-3 tensor.
pub fn transpose01(x: &Tensor) -> Result<Tensor> {
    let (a, b, c) = expect_3d(x, "transpose01")?;
    let mut out = Vec::with_capacity(x.len());
    for j in 0..b {
        for i in 0..a {
            out.extend_from_slice(&x.data()[(i * b + j) * c..(i * b + j + 1) * c]);
        }
    }
    Tensor::new(&[b, a, c], out)
}

/// Concatenates matrices with equal row counts along the column axis.
pub fn concat_cols(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts.first().ok_or_else(|| Error::shape("concat_cols", "no inputs"))?;
    let rows = expect_2d(first, "concat_cols")?.0;
    let mut total = 0;
    for p in parts {
        let (r, c) = expect_2d(p, "concat_cols")?;
        if r != rows {
            return Err(Error::shape("concat_cols", format!("row counts {rows} vs {r}")));
        }
        total += c;
    }
    let mut out = Vec::with_capacity(rows * total);
    for r in 0..rows {
        for p in parts {
            out.extend_from_slice(p.row(r));
        }
    }
    Tensor::new(&[rows, total], out)
}

pub fn slice_cols(x: &Tensor, start: usize, width: usize) -> Result<Tensor> {
    let (rows, cols) = expect_2d(x, "slice_cols")?;
    if width == 0 || start + width > cols {
        return Err(Error::shape("slice_cols", format!("[{start}, {start}+{width}) of {cols}")));
    }
    let mut out = Vec::with_capacity(rows * width);
    for r in 0..rows {
        out.extend_from_slice(&x.row(r)[start..start + width]);
    }
    Tensor::new(&[rows, width], out)
}

/// Stacks matrices with equal widths along the row axis.
pub fn concat_rows(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts.first().ok_or_else(|| Error::shape("concat_rows", "no inputs"))?;
    let cols = expect_2d(first, "concat_rows")?.1;
    let mut rows = 0;
    let mut out = Vec::new();
    for p in parts {
        let (r, c) = expect_2d(p, "concat_rows")?;
        if c != cols {
            return Err(Error::shape("concat_rows", format!("widths {cols} vs {c}")));
        }
        rows += r;
        out.extend_from_slice(p.data());
    }
    Tensor::new(&[rows, cols], out)
}

pub fn slice_rows(x: &Tensor, start: usize, len: usize) -> Result<Tensor> {
    let (rows, cols) = expect_2d(x, "slice_rows")?;
    if len == 0 || start + len > rows {
        return Err(Error::shape("slice_rows", format!("[{start}, {start}+{len}) of {rows}")));
    }
    Tensor::new(&[len, cols], x.data()[start * cols..(start + len) * cols].to_vec())
}

pub fn select_rows(x: &Tensor, idx: &[usize]) -> Result<Tensor> {
    let (rows, cols) = expect_2d(x, "select_rows")?;
    if idx.is_empty() || idx.iter().any(|&i| i >= rows) {
        return Err(Error::shape("select_rows", format!("indices out of range for {rows} rows")));
    }
    let mut out = Vec::with_capacity(idx.len() * cols);
    for &i in idx {
        out.extend_from_slice(x.row(i));
    }
    Tensor::new(&[idx.len(), cols], out)
}

pub fn sum_all(x: &Tensor) -> Tensor {
    Tensor::scalar(x.sum())
}

pub fn mean_all(x: &Tensor) -> Tensor {
    Tensor::scalar(x.sum() / x.len() as f64)
}
