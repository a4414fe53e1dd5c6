//! Execution strategy for the data-parallel loops (item scoring, respondent
//! scoring, batch evaluation).
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the rayon global pool. Without it every strategy runs sequentially, so
//! results are identical either way; only wall-clock time differs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch of independent work items is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this strategy actually runs on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving fallible map; returns the first error in input order.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let input: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&input, |x| x * x + 1);
        let par = Execution::Parallel.map(&input, |x| x * x + 1);
        assert_eq!(seq, par);
    }

    #[test]
    fn try_map_reports_first_error_in_order() {
        let input: Vec<i32> = (0..100).collect();
        let res: Result<Vec<i32>, i32> =
            Execution::Parallel.try_map(&input, |&x| if x % 30 == 29 { Err(x) } else { Ok(x) });
        assert_eq!(res, Err(29));
    }
}
