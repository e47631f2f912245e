//! Replica-level data parallelism.
//!
//! Replicas are independent; results always come back ordered by replica id,
//! so any reduction over them is identical at every thread count. With the
//! `parallel` feature disabled everything runs on the calling thread.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `f(0), f(1), ..., f(n - 1)` in replica order.
pub fn map_replicas<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_replicas_sequential(n, f)
    }
}

/// Fallible variant of [`map_replicas`]; the first error in replica order wins.
pub fn try_map_replicas<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    map_replicas(n, f).into_iter().collect()
}

/// Single-threaded reference path.
pub fn map_replicas_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n as u64).map(f).collect()
}

/// Run `op` with at most `threads` workers (0 keeps the global default).
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(op);
            }
        }
        op()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        op()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_results() {
        let v = map_replicas(1000, |i| i * i);
        assert_eq!(v, map_replicas_sequential(1000, |i| i * i));
        let one = with_threads(1, || map_replicas(100, |i| i as f64 * 0.1));
        let four = with_threads(4, || map_replicas(100, |i| i as f64 * 0.1));
        assert_eq!(one, four);
    }

    #[test]
    fn first_error_in_order() {
        let r: Result<Vec<u64>, u64> = try_map_replicas(50, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
