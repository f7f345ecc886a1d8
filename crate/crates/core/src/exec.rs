//! Parallel/sequential execution switch.
//!
//! With the `parallel` feature (default) work items are distributed over the
//! rayon pool; without it, or with [`Execution::Sequential`], they run in
//! order on the calling thread. Results are always returned in index order,
//! so both modes produce identical output.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    /// `(0..n).map(f)` collected in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Like [`Execution::map`] but stops at the first error (lowest index).
    pub fn try_map<T, F>(self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Execution::Sequential.map(1000, f);
        let b = Execution::Parallel.map(1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn try_map_reports_lowest_failing_index() {
        let r = Execution::Parallel.try_map(100, |i| {
            if i % 30 == 29 {
                Err(crate::Error::NoRoot(format!("{i}")))
            } else {
                Ok(i)
            }
        });
        assert_eq!(r, Err(crate::Error::NoRoot("29".into())));
    }
}
