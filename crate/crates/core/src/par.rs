//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns results in index order, so the output is the same
//! whether or not the `parallel` feature is enabled.

/// True when the crate was built with the `parallel` feature.
pub const fn enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential counterpart of [`map_range`], always available.
pub fn map_range_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Applies `f(row_index, row)` to every `width`-sized chunk of `out`.
pub(crate) fn for_each_row<F>(out: &mut [f64], width: usize, parallel: bool, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        out.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = parallel;
    out.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}
