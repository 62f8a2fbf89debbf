//! Row-parallel loops. Every row is computed independently with a fixed
//! summation order, so results do not depend on the worker count.

#[cfg(feature = "parallel")]
pub(crate) fn for_each_row<F>(values: &mut [f64], cols: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    use rayon::prelude::*;
    values.par_chunks_mut(cols).enumerate().for_each(|(i, row)| f(i, row));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_row<F>(values: &mut [f64], cols: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    values.chunks_mut(cols).enumerate().for_each(|(i, row)| f(i, row));
}
