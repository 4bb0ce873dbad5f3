//! Index-ordered parallel map. Output order never depends on scheduling.

/// `(0..count).map(f)`, spread over `workers` threads (the global pool when
/// `None`). Without the `parallel` feature this runs sequentially.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(count: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match workers {
        Some(1) => (0..count).map(f).collect(),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
            Err(_) => (0..count).map(f).collect(),
        },
        None => (0..count).into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(count: usize, _workers: Option<usize>, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}
