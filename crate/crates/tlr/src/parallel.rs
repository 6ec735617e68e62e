use rayon::prelude::*;

/// Default worker count: the machine's available parallelism.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// `f` applied to every item on a pool of `threads` workers. Results keep the
/// input order, so output does not depend on the thread count.
pub fn par_map<T: Sync, R: Send>(threads: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running sequentially");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_threads() {
        let items: Vec<u64> = (0..50).collect();
        let one = par_map(1, &items, |x| x * x);
        let many = par_map(7, &items, |x| x * x);
        assert_eq!(one, many);
        assert!(par_map(4, &[] as &[u64], |x| *x).is_empty());
    }
}
