//! Damped Newton minimization for small smooth objectives with analytic
//! gradient and Hessian.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// A twice-differentiable scalar function of `dim()` variables.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
    fn hessian(&self, x: &[f64], out: &mut Matrix) -> Result<()>;
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Converged when ‖∇f‖ falls below this.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Cap on the Euclidean length of a single step.
    pub max_step: f64,
    /// Eigenvalues below this magnitude are treated as flat directions.
    pub curvature_floor: f64,
    /// After converging, negative curvature below `-negative_curvature_tol`
    /// triggers a kick along that direction.
    pub negative_curvature_tol: f64,
    pub max_saddle_escapes: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            gradient_tol: 1e-12,
            max_iterations: 500,
            max_step: 0.5,
            curvature_floor: 1e-12,
            negative_curvature_tol: 1e-12,
            max_saddle_escapes: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Lowest Hessian eigenvalue at `x`.
    pub min_curvature: f64,
}

/// Newton iteration on the eigen-decomposed Hessian.
///
/// With a positive-definite Hessian this is the plain Newton step. Otherwise
/// each eigen-direction is scaled by `1/|λ|` (floored), which descends along
/// negative curvature instead of climbing to the saddle. Steps are halved
/// until the objective does not increase.
pub fn newton_minimize<O: Objective>(obj: &O, x0: &[f64], opts: &NewtonOptions) -> Result<Minimum> {
    let n = obj.dim();
    assert_eq!(x0.len(), n, "start point has wrong dimension");
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut h = Matrix::zeros(n, n);
    let mut f = obj.value(&x)?;
    let mut escapes = 0;
    let mut iterations = 0;

    loop {
        obj.gradient(&x, &mut g)?;
        let gnorm = linalg::norm(&g);
        obj.hessian(&x, &mut h)?;
        let eig = linalg::symmetric_eigen(&h);
        let min_curv = eig.values[0];

        if gnorm < opts.gradient_tol {
            if min_curv < -opts.negative_curvature_tol && escapes < opts.max_saddle_escapes {
                escapes += 1;
                let dir = eig.vector(0);
                x = kick(obj, &x, &dir, f)?;
                f = obj.value(&x)?;
                continue;
            }
            return Ok(Minimum { x, value: f, gradient_norm: gnorm, iterations, min_curvature: min_curv });
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged { iterations, gradient_norm: gnorm });
        }
        iterations += 1;

        let mut step = vec![0.0; n];
        for k in 0..n {
            let v = eig.vector(k);
            let lam = eig.values[k].abs().max(opts.curvature_floor);
            let c = linalg::dot(&v, &g) / lam;
            for i in 0..n {
                step[i] -= c * v[i];
            }
        }
        let len = linalg::norm(&step);
        if len > opts.max_step {
            step.iter_mut().for_each(|s| *s *= opts.max_step / len);
        }

        let mut t = 1.0;
        let mut accepted = false;
        let mut trial = vec![0.0; n];
        let mut g_trial = vec![0.0; n];
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = x[i] + t * step[i];
            }
            if let Ok(ft) = obj.value(&trial) {
                let slack = 8.0 * f64::EPSILON * f.abs().max(1.0);
                if ft < f {
                    accepted = true;
                } else if ft <= f + slack {
                    // objective flat to round-off: judge by the gradient
                    obj.gradient(&trial, &mut g_trial)?;
                    accepted = linalg::norm(&g_trial) < gnorm;
                }
                if accepted {
                    x.copy_from_slice(&trial);
                    f = ft;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NotConverged { iterations, gradient_norm: gnorm });
        }
    }
}

fn kick<O: Objective>(obj: &O, x: &[f64], dir: &[f64], f0: f64) -> Result<Vec<f64>> {
    let mut best = x.to_vec();
    let mut best_f = f0;
    for amp in [0.05, -0.05, 0.2, -0.2] {
        let trial: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + amp * di).collect();
        if let Ok(ft) = obj.value(&trial) {
            if ft < best_f {
                best = trial;
                best_f = ft;
            }
        }
    }
    if best_f == f0 {
        // nothing lower nearby; still move off the stationary point
        best = x.iter().zip(dir).map(|(xi, di)| xi + 0.05 * di).collect();
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quartic;

    // f = (x² − 1)² + y², minima at (±1, 0), saddle at the origin
    impl Objective for Quartic {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok((x[0] * x[0] - 1.0).powi(2) + x[1] * x[1])
        }
        fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0);
            out[1] = 2.0 * x[1];
            Ok(())
        }
        fn hessian(&self, x: &[f64], out: &mut Matrix) -> Result<()> {
            out[(0, 0)] = 12.0 * x[0] * x[0] - 4.0;
            out[(0, 1)] = 0.0;
            out[(1, 0)] = 0.0;
            out[(1, 1)] = 2.0;
            Ok(())
        }
    }

    #[test]
    fn finds_minimum_from_generic_start() {
        let m = newton_minimize(&Quartic, &[0.3, 0.7], &NewtonOptions::default()).unwrap();
        assert!((m.x[0].abs() - 1.0).abs() < 1e-12);
        assert!(m.x[1].abs() < 1e-12);
        assert!(m.min_curvature > 0.0);
    }

    #[test]
    fn escapes_exact_saddle() {
        let m = newton_minimize(&Quartic, &[0.0, 0.0], &NewtonOptions::default()).unwrap();
        assert!((m.x[0].abs() - 1.0).abs() < 1e-12);
        assert!(m.value < 1e-20);
    }

    #[test]
    fn iteration_cap_reports_gradient() {
        let opts = NewtonOptions { max_iterations: 0, ..Default::default() };
        match newton_minimize(&Quartic, &[3.0, 1.0], &opts) {
            Err(Error::NotConverged { gradient_norm, .. }) => assert!(gradient_norm > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
