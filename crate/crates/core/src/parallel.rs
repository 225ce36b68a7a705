//! Minimal index-parallel map with deterministic output ordering.

/// Evaluates `f(0), f(1), ..., f(n-1)` on up to `threads` worker threads and
/// returns results in index order. `threads == 0` uses the available
/// parallelism; `threads == 1` (or `n <= 1`) runs inline.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = if threads == 0 {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
    } else {
        threads
    };
    let threads = threads.min(n.max(1));
    if threads <= 1 {
        return (0..n).map(f).collect();
    }

    let mut chunks: Vec<Vec<(usize, T)>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|tid| {
                let f = &f;
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut i = tid;
                    while i < n {
                        out.push((i, f(i)));
                        i += threads;
                    }
                    out
                })
            })
            .collect();
        for h in handles {
            chunks.push(h.join().expect("worker thread panicked"));
        }
    });

    let mut indexed: Vec<(usize, T)> = chunks.into_iter().flatten().collect();
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, t)| t).collect()
}
