//! Block-partitioned execution.
//!
//! Work is always cut into the same blocks regardless of the worker count,
//! and block results come back in block order. Reductions over them are
//! therefore reproducible bit-for-bit for any number of workers.

/// Number of workers the machine offers.
pub fn available_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Worker count actually used for a requested count.
///
/// Without the `parallel` feature this is always 1.
pub fn effective_workers(requested: usize) -> usize {
    if cfg!(feature = "parallel") {
        requested.max(1)
    } else {
        1
    }
}

/// Evaluate `f` on every block index in `0..blocks`, returning the results
/// in index order.
#[cfg(feature = "parallel")]
pub fn map_blocks<T, F>(blocks: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    if workers <= 1 || blocks <= 1 {
        return (0..blocks).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..blocks).into_par_iter().map(&f).collect()),
        // pool creation only fails on thread spawn errors; fall back to one thread
        Err(_) => (0..blocks).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_blocks<T, F>(blocks: usize, _workers: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..blocks).map(f).collect()
}

/// Split the inclusive range `lo..=hi` into blocks of `block` integers.
pub fn block_bounds(lo: u64, hi: u64, block: u64, index: usize) -> (u64, u64) {
    let start = lo + index as u64 * block;
    let end = (start + block - 1).min(hi);
    (start, end)
}

/// Number of blocks of size `block` needed to cover `lo..=hi`.
pub fn block_count(lo: u64, hi: u64, block: u64) -> usize {
    if hi < lo {
        0
    } else {
        ((hi - lo) / block + 1) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_range_once() {
        let (lo, hi, b) = (1, 1003, 100);
        let n = block_count(lo, hi, b);
        assert_eq!(n, 11);
        let mut next = lo;
        for i in 0..n {
            let (s, e) = block_bounds(lo, hi, b, i);
            assert_eq!(s, next);
            next = e + 1;
        }
        assert_eq!(next, hi + 1);
        assert_eq!(block_count(5, 4, 10), 0);
    }

    #[test]
    fn results_in_block_order() {
        for w in [1, 2, 4] {
            let v = map_blocks(50, w, |i| i * i);
            assert_eq!(v, (0..50).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
