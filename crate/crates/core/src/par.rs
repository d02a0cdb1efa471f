//! Execution policy for the data-parallel loops.
//!
//! Every parallel loop in the crate produces one value per index and reduces
//! the values afterwards in index order, so results are bitwise identical
//! whatever the thread count. The policy is scoped to the calling thread:
//! [`with_policy`] switches a block of work to the sequential path, which is
//! also the only path when the `parallel` feature is disabled.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

thread_local! {
    static POLICY: Cell<Option<Parallelism>> = const { Cell::new(None) };
}

/// Policy in force on the current thread.
pub fn current() -> Parallelism {
    POLICY.with(|p| p.get()).unwrap_or_default()
}

/// Run `f` with `policy` installed on the current thread.
pub fn with_policy<R>(policy: Parallelism, f: impl FnOnce() -> R) -> R {
    struct Restore(Option<Parallelism>);
    impl Drop for Restore {
        fn drop(&mut self) {
            POLICY.with(|p| p.set(self.0));
        }
    }
    let _restore = Restore(POLICY.with(|p| p.replace(Some(policy))));
    f()
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match current() {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Fallible [`map_range`]. On failure the error with the lowest index wins,
/// independent of scheduling.
pub fn try_map_range<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_range(n, f).into_iter().collect()
}

/// Ordered sum, so the reduction does not depend on how the terms were produced.
pub fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scoped_policy_restores() {
        let outer = current();
        with_policy(Parallelism::Sequential, || {
            assert_eq!(current(), Parallelism::Sequential);
        });
        assert_eq!(current(), outer);
    }

    #[test]
    fn map_range_is_ordered_under_both_policies() {
        let par = map_range(1000, |i| i * i);
        let seq = with_policy(Parallelism::Sequential, || map_range(1000, |i| i * i));
        assert_eq!(par, seq);
        assert_eq!(par[31], 961);
    }

    #[test]
    fn try_map_reports_lowest_failing_index() {
        let r: Result<Vec<usize>, usize> = try_map_range(100, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
