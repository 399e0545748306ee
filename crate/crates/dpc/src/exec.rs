//! Indexed map over independent work items.
//!
//! Monte Carlo trials, batch query evaluation, and sweep cells all have the
//! same shape: `n` items, each computed from its index alone (the item forks
//! its own rng). Results come back in index order, so downstream reductions
//! are fixed left-to-right and the parallel and sequential paths produce
//! identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, parallel when the `parallel` feature is enabled.
pub fn run<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        run_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_seq(n, f)
    }
}

/// Sequential reference path; always available for comparison.
pub fn run_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn run_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_index_order() {
        let out = run(1000, |i| i * i);
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, i * i);
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let f = |i: usize| {
            let mut rng = crate::RngState::from_seed(42).fork(i as u64);
            rng.next_f64()
        };
        assert_eq!(run_par(500, f), run_seq(500, f));
    }
}
