//! Raw slice kernels shared by the eager and taped backends.

use crate::par;

/// Work (m·k·n multiply-adds) above which matrix products fan out over rows.
const PAR_THRESHOLD: usize = 1 << 15;

#[inline]
fn gemm_row(a_row: &[f64], b: &[f64], n: usize, out: &mut [f64]) {
    out.fill(0.0);
    for (p, &av) in a_row.iter().enumerate() {
        if av == 0.0 {
            continue;
        }
        let b_row = &b[p * n..(p + 1) * n];
        for (o, &bv) in out.iter_mut().zip(b_row) {
            *o += av * bv;
        }
    }
}

/// `out[m×n] = a[m×k] · b[k×n]`, single-threaded.
pub fn matmul_seq(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    par::for_each_row(&mut out, n, false, |i, row| gemm_row(&a[i * k..(i + 1) * k], b, n, row));
    out
}

/// `out[m×n] = a[m×k] · b[k×n]`, rows distributed over the rayon pool.
#[cfg(feature = "parallel")]
pub fn matmul_par(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    par::for_each_row(&mut out, n, true, |i, row| gemm_row(&a[i * k..(i + 1) * k], b, n, row));
    out
}

/// Dispatching matrix product; bit-identical to [`matmul_seq`].
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let parallel = par::enabled() && m > 1 && m * k * n >= PAR_THRESHOLD;
    let mut out = vec![0.0; m * n];
    par::for_each_row(&mut out, n, parallel, |i, row| gemm_row(&a[i * k..(i + 1) * k], b, n, row));
    out
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

/// Batched product over `batch` independent `[m×k]·[k×n]` pairs.
pub fn bmm(a: &[f64], b: &[f64], batch: usize, m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(batch * m * n);
    for s in 0..batch {
        out.extend(matmul_seq(&a[s * m * k..(s + 1) * m * k], &b[s * k * n..(s + 1) * k * n], m, k, n));
    }
    out
}

/// Transposes the last two axes of a `[batch, r, c]` block.
pub fn batch_transpose(a: &[f64], batch: usize, r: usize, c: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    for s in 0..batch {
        out.extend(transpose(&a[s * r * c..(s + 1) * r * c], r, c));
    }
    out
}

/// Splits `shape` around `axis` into (outer, axis length, inner).
pub fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// Softmax over the middle extent of an (outer, len, inner) layout.
pub fn softmax(x: &[f64], outer: usize, len: usize, inner: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for o in 0..outer {
        for i in 0..inner {
            let idx = |j: usize| (o * len + j) * inner + i;
            let max = (0..len).map(|j| x[idx(j)]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for j in 0..len {
                let e = (x[idx(j)] - max).exp();
                out[idx(j)] = e;
                total += e;
            }
            for j in 0..len {
                out[idx(j)] /= total;
            }
        }
    }
    out
}

/// Vector-Jacobian product of softmax given its output `y`.
pub fn softmax_backward(y: &[f64], dy: &[f64], outer: usize, len: usize, inner: usize) -> Vec<f64> {
    let mut dx = vec![0.0; y.len()];
    for o in 0..outer {
        for i in 0..inner {
            let idx = |j: usize| (o * len + j) * inner + i;
            let dot: f64 = (0..len).map(|j| y[idx(j)] * dy[idx(j)]).sum();
            for j in 0..len {
                dx[idx(j)] = y[idx(j)] * (dy[idx(j)] - dot);
            }
        }
    }
    dx
}

/// Row standardization (population variance, `eps` inside the root).
/// Returns the normalized rows and the per-row inverse standard deviations.
pub fn standardize(x: &[f64], rows: usize, cols: usize, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let mut xhat = vec![0.0; x.len()];
    let mut inv_std = vec![0.0; rows];
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        let mean = row.iter().sum::<f64>() / cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let is = 1.0 / (var + eps).sqrt();
        inv_std[r] = is;
        for (o, v) in xhat[r * cols..(r + 1) * cols].iter_mut().zip(row) {
            *o = (v - mean) * is;
        }
    }
    (xhat, inv_std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_product() {
        let out = matmul(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0], 2, 2, 1);
        assert_eq!(out, vec![3.0, 7.0]);
    }

    #[test]
    fn dispatch_matches_sequential_bitwise() {
        let (m, k, n) = (64, 33, 40);
        let a: Vec<f64> = (0..m * k).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| ((i * 53 % 97) as f64 - 48.0) / 13.0).collect();
        assert_eq!(matmul(&a, &b, m, k, n), matmul_seq(&a, &b, m, k, n));
    }

    #[test]
    fn transpose_twice_is_identity() {
        let a: Vec<f64> = (0..12).map(f64::from).collect();
        assert_eq!(transpose(&transpose(&a, 3, 4), 4, 3), a);
    }
}
