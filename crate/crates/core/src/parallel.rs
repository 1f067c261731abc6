//! Thread pool sized by the `LUQ_THREADS` environment variable.
//!
//! Work is only ever split over independent samples or models, each computed
//! sequentially, so results do not depend on the thread count.

use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

pub const THREADS_ENV: &str = "LUQ_THREADS";

/// Thread cap from `LUQ_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            builder = builder.num_threads(n);
        }
        builder.build().expect("thread pool")
    })
}

/// Runs `f` inside the crate's pool so nested rayon iterators honour the cap.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}
