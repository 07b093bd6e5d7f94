//! Execution fan-out for the data-parallel passes.
//!
//! Every parallel pass in this crate is an order-preserving map over a
//! slice, so results are identical bytes whether it runs sequentially or
//! over a rayon pool. Without the `parallel` feature the crate compiles
//! with no rayon dependency and every pass runs sequentially.

/// Requested execution mode for the data-parallel passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Fan out over a dedicated pool of this many worker threads.
    /// Falls back to sequential when the `parallel` feature is off.
    Threads(usize),
}

impl Parallelism {
    /// Interprets a thread-count knob: 0 and 1 mean sequential.
    pub fn from_threads(n: usize) -> Self {
        if n <= 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Threads(n)
        }
    }
}

/// A resolved executor. Construct once per run; pool construction is not
/// free, so callers should reuse it across passes.
pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
    #[cfg(not(feature = "parallel"))]
    _mode: (),
}

impl Executor {
    pub fn new(mode: Parallelism) -> Self {
        #[cfg(feature = "parallel")]
        {
            let pool = match mode {
                Parallelism::Sequential => None,
                Parallelism::Threads(n) => Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build()
                        .expect("failed to build worker pool"),
                ),
            };
            Executor { pool }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = mode;
            Executor { _mode: () }
        }
    }

    pub fn sequential() -> Self {
        Executor::new(Parallelism::Sequential)
    }

    /// Order-preserving indexed map over a slice.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(usize, &T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| {
                items
                    .par_iter()
                    .enumerate()
                    .map(|(i, item)| f(i, item))
                    .collect()
            });
        }
        items.iter().enumerate().map(|(i, item)| f(i, item)).collect()
    }
}
