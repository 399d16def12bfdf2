//! Per-essay work on a bounded thread pool.

use rayon::prelude::*;

/// Maps `f` over `items` on `jobs` worker threads (0 means one per core).
/// Results come back in input order.
pub fn par_map<T, U, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<U>, rayon::ThreadPoolBuildError>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}
