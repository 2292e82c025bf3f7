//! Thread-pool selection. `ENTROSCOPE_THREADS` caps the pool; results never
//! depend on the thread count because every parallel map is collected in
//! index order and reduced sequentially.

use std::sync::OnceLock;

use rayon::ThreadPool;

fn pool() -> Option<&'static ThreadPool> {
    static POOL: OnceLock<Option<ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n: usize = std::env::var("ENTROSCOPE_THREADS").ok()?.trim().parse().ok()?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().ok()
    })
    .as_ref()
}

/// Runs `f` inside the configured pool (or rayon's global pool).
pub fn install<R: Send, F: FnOnce() -> R + Send>(f: F) -> R {
    match pool() {
        Some(p) => p.install(f),
        None => f(),
    }
}
