//! Data-parallel maps with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool whose
//! size can be capped with `MASKS_THREADS` (0 or unset = rayon's default).
//! Results always come back in input order, so callers fold them
//! deterministically.

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MASKS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[cfg(feature = "parallel")]
fn pool() -> Option<&'static rayon::ThreadPool> {
    use std::sync::OnceLock;
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads: usize = std::env::var(THREADS_ENV).ok()?.trim().parse().ok()?;
        if threads == 0 {
            return None;
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("masks-worker-{i}"))
            .build()
            .ok()
    })
    .as_ref()
}

impl Execution {
    /// `f(index, item)` for every item, results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                let run = || items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect();
                match pool() {
                    Some(p) => p.install(run),
                    None => run(),
                }
            }
            _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
        }
    }

    /// Like [`Execution::map`], reporting the error of the lowest failing
    /// index so the outcome does not depend on scheduling.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(usize, &T) -> Result<R, E> + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
            Execution::Parallel => self.map(items, f).into_iter().collect(),
        }
    }
}
