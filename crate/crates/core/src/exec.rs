//! Data-parallel execution helpers.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] spreads row
//! loops and batch work over the rayon pool. Without it every call runs on the
//! calling thread, whatever variant is passed.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Fills `out` row by row; `f` receives the row number and the row slice.
    pub fn fill_rows<F>(self, out: &mut [f64], width: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => out
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(y, row)| f(y, row)),
            _ => out.chunks_mut(width).enumerate().for_each(|(y, row)| f(y, row)),
        }
    }

    pub fn fill_rows_u8<F>(self, out: &mut [u8], width: usize, f: F)
    where
        F: Fn(usize, &mut [u8]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => out
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(y, row)| f(y, row)),
            _ => out.chunks_mut(width).enumerate().for_each(|(y, row)| f(y, row)),
        }
    }

    /// Order-preserving map over independent work items.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }
}
