//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) the indexed maps below run on the
//! current rayon pool; without it, or with [`Exec::Sequential`], they run in
//! order on the calling thread. Results are always returned in index order,
//! so the choice never changes the output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        !matches!(self, Exec::Sequential)
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Maps over a slice, possibly in parallel.
pub fn map_slice<S, T, F>(exec: Exec, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
    }
}

/// Runs `f` inside a dedicated pool of `jobs` threads when parallelism is
/// available; otherwise just calls `f`.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(j) = jobs {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            return pool.install(f);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_default_agree() {
        let a = map_indexed(Exec::Sequential, 100, |i| i * i);
        let b = map_indexed(Exec::default(), 100, |i| i * i);
        assert_eq!(a, b);
        let c = with_jobs(Some(2), || map_slice(Exec::default(), &a, |v| v + 1));
        assert_eq!(c[10], 101);
    }
}
