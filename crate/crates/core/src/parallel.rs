//! Worker-count control for the rollout loops.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool of
//! the requested size. Without it, or with one worker, everything runs on the
//! calling thread. Results are always returned in index order, so output never
//! depends on the worker count.

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parallelism {
    /// 0 means "use every available core".
    workers: usize,
}

impl Default for Parallelism {
    fn default() -> Self {
        Self::available()
    }
}

impl Parallelism {
    pub fn sequential() -> Self {
        Self { workers: 1 }
    }

    pub fn available() -> Self {
        Self { workers: 0 }
    }

    pub fn workers(workers: usize) -> Self {
        Self { workers }
    }

    pub fn worker_count(&self) -> usize {
        self.workers
    }

    pub fn is_sequential(&self) -> bool {
        self.workers == 1 || !cfg!(feature = "parallel")
    }

    /// Evaluate `f(0..n)` and collect the results in index order.
    pub fn map_range<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        if self.is_sequential() || n < 2 {
            return (0..n).map(f).collect();
        }
        self.map_range_parallel(n, f)
    }

    #[cfg(feature = "parallel")]
    fn map_range_parallel<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        use rayon::prelude::*;
        let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
        match pool::get(self.workers) {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn map_range_parallel<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        (0..n).map(f).collect()
    }

    /// Fill `data` in consecutive blocks of `block` elements; block `j` is handed to `f(j, block)`.
    pub fn fill_blocks<F>(&self, data: &mut [f64], block: usize, f: F) -> Result<()>
    where
        F: Fn(usize, &mut [f64]) -> Result<()> + Sync + Send,
    {
        if block == 0 {
            return Ok(());
        }
        if self.is_sequential() {
            return data
                .chunks_mut(block)
                .enumerate()
                .try_for_each(|(j, chunk)| f(j, chunk));
        }
        self.fill_blocks_parallel(data, block, f)
    }

    #[cfg(feature = "parallel")]
    fn fill_blocks_parallel<F>(&self, data: &mut [f64], block: usize, f: F) -> Result<()>
    where
        F: Fn(usize, &mut [f64]) -> Result<()> + Sync + Send,
    {
        use rayon::prelude::*;
        let f = &f;
        let mut run = move || {
            data.par_chunks_mut(block)
                .enumerate()
                .try_for_each(|(j, chunk)| f(j, chunk))
        };
        match pool::get(self.workers) {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn fill_blocks_parallel<F>(&self, data: &mut [f64], block: usize, f: F) -> Result<()>
    where
        F: Fn(usize, &mut [f64]) -> Result<()> + Sync + Send,
    {
        data.chunks_mut(block)
            .enumerate()
            .try_for_each(|(j, chunk)| f(j, chunk))
    }
}

#[cfg(feature = "parallel")]
mod pool {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    use rayon::{ThreadPool, ThreadPoolBuilder};

    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();

    /// Pool with exactly `workers` threads; `None` selects rayon's global pool.
    pub(super) fn get(workers: usize) -> Option<Arc<ThreadPool>> {
        if workers == 0 {
            return None;
        }
        let pools = POOLS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut pools = pools.lock().unwrap_or_else(|e| e.into_inner());
        let pool = pools.entry(workers).or_insert_with(|| {
            Arc::new(
                ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(move |i| format!("interplay-{workers}-{i}"))
                    .build()
                    .expect("failed to build rollout thread pool"),
            )
        });
        Some(Arc::clone(pool))
    }
}
