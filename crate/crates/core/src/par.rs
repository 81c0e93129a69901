//! Thin switch between rayon and sequential iteration.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use std::cell::Cell;

thread_local! {
    static SEQ: Cell<bool> = const { Cell::new(false) };
}

fn forced_sequential() -> bool {
    SEQ.with(|s| s.get())
}

/// Runs `f` with every helper in this module iterating sequentially on the
/// calling thread. Used by the benches to compare against the parallel path.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let old = SEQ.with(|s| s.replace(true));
    let r = f();
    SEQ.with(|s| s.set(old));
    r
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    if !forced_sequential() {
        return items.par_iter().map(f).collect();
    }
    let _ = forced_sequential;
    items.iter().map(f).collect()
}

/// Maps over `0..n`.
pub fn map_range<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    if !forced_sequential() {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}
