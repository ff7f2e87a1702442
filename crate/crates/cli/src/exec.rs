use rayon::prelude::*;

use ionrotor_core::Executor;

use crate::error::CliError;

/// Scan points fanned out over a rayon pool. Results keep axis order.
#[derive(Debug)]
pub struct Pool(rayon::ThreadPool);

impl Pool {
    pub fn new(jobs: Option<usize>) -> Result<Self, CliError> {
        if jobs == Some(0) {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
        Ok(Pool(pool))
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, xs: &[f64], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(f64) -> T + Sync + Send,
    {
        self.0.install(|| xs.par_iter().map(|&x| f(x)).collect())
    }
}

/// Progress lines on standard error.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub quiet: bool,
}

impl Progress {
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_axis_order() {
        let pool = Pool::new(Some(4)).unwrap();
        let xs: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let ys = pool.map(&xs, |x| {
            std::thread::sleep(std::time::Duration::from_micros((200.0 - x) as u64));
            2.0 * x
        });
        assert!(ys.iter().enumerate().all(|(i, y)| *y == 2.0 * i as f64));
    }
}
