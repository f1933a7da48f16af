//! Run-granularity parallelism. Individual simulations stay sequential; only
//! independent runs (sweep points, channel inputs) are spread over threads.

/// How independent runs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// Worker pool with the given thread count, or the global pool when `None`.
    /// Without the `parallel` feature this runs sequentially.
    Parallel(Option<usize>),
}

impl Execution {
    /// `--jobs` semantics: 1 is sequential, 0 uses every core.
    pub fn from_jobs(jobs: usize) -> Self {
        match jobs {
            1 => Execution::Sequential,
            0 => Execution::Parallel(None),
            n => Execution::Parallel(Some(n)),
        }
    }

    /// Applies `f` to every item, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            Execution::Parallel(threads) => parallel_map(threads, items, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(threads: Option<usize>, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match threads {
        None => items.par_iter().map(f).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); running sequentially");
                items.iter().map(f).collect()
            }
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(_threads: Option<usize>, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}
