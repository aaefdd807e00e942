//! Data-parallel map with a sequential fallback.
//!
//! Everything parallel in this crate funnels through [`map_indexed`]: results
//! come back in index order regardless of scheduling, so outputs are
//! bit-identical whether the `parallel` feature is on, off, or running on a
//! pool of any size.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
