//! How independent scan points get evaluated.
//!
//! Scans in this crate are maps over an axis followed by an optional
//! sequential post-process. The map is delegated to an [`Executor`] so a
//! std caller can fan the points out over a thread pool; results always come
//! back in axis order.

use alloc::vec::Vec;

pub trait Executor {
    fn map<T, F>(&self, xs: &[f64], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(f64) -> T + Sync + Send;
}

/// Evaluates points one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, xs: &[f64], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(f64) -> T + Sync + Send,
    {
        xs.iter().map(|&x| f(x)).collect()
    }
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive. A single step
/// (or `lo == hi`) yields just `lo`.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 || lo == hi {
        return alloc::vec![lo];
    }
    let n = (steps - 1) as f64;
    (0..steps).map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / n }).collect()
}
