//! Execution mode for the data-parallel loops.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] runs on the rayon
//! pool; without it every mode runs sequentially. Results are identical in
//! both modes: every parallel loop here is an order-preserving map or filter.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// The mode the crate was built to prefer.
    pub fn preferred() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

pub(crate) fn filter_map<T, R, F>(items: &[T], exec: Exec, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().filter_map(f).collect(),
        _ => items.iter().filter_map(f).collect(),
    }
}

pub(crate) fn map<T, R, F>(items: &[T], exec: Exec, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Index of the minimum key; ties go to the lowest index.
pub(crate) fn min_by_key<T, K, F>(items: &[T], exec: Exec, key: F) -> Option<usize>
where
    T: Sync,
    K: PartialOrd + Send + Copy,
    F: Fn(&T) -> K + Sync + Send,
{
    let pick = |a: (usize, K), b: (usize, K)| match b.1.partial_cmp(&a.1) {
        Some(std::cmp::Ordering::Less) => b,
        Some(std::cmp::Ordering::Equal) if b.0 < a.0 => b,
        _ => a,
    };
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items
            .par_iter()
            .enumerate()
            .map(|(i, t)| (i, key(t)))
            .reduce_with(pick)
            .map(|(i, _)| i),
        _ => items
            .iter()
            .enumerate()
            .map(|(i, t)| (i, key(t)))
            .reduce(pick)
            .map(|(i, _)| i),
    }
}
