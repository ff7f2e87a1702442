//! Effective one-dimensional potential of the rigid three-ion rotor.
//!
//! The orientation of a planar crystal is measured by
//! `Θ = arg(Σⱼ wⱼ³) / 3`, where `wⱼ = (xⱼ − x̄) + i(zⱼ − z̄)` is ion `j`
//! relative to the centroid in the x–z plane. Θ is unchanged by any
//! relabelling of ions, advances by δ under a rigid rotation by δ about y,
//! and is defined modulo 2π/3. For each Θ on a grid the remaining
//! coordinates are relaxed with Θ held fixed; the relaxed energy, less its
//! minimum, is U(Θ).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::crystal::{find_equilibrium, IonCrystal, ScaledPotential, TrapConfig, ZERO_MODE_TOL};
use crate::exec::Executor;
use crate::linalg::{self, Matrix};
use crate::math;
use crate::{Error, Result};

/// Rotor period in Θ.
pub const PERIOD: f64 = PI / 3.0;
/// Default samples per period.
pub const DEFAULT_SAMPLES: usize = 256;
pub const MIN_SAMPLES: usize = 64;

const KKT_GRADIENT_TOL: f64 = 1e-12;
const KKT_CONSTRAINT_TOL: f64 = 1e-13;
const KKT_MAX_ITER: usize = 60;

/// Sampled U(Θ) with the rotor's inertia.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotorPotential {
    /// Uniform angles over [0, 2π), rad.
    pub theta_grid: Vec<f64>,
    /// Energies, J, with the minimum subtracted.
    pub u: Vec<f64>,
    /// sqrt(I / (N m)), m.
    pub r0: f64,
    /// kg·m²
    pub inertia: f64,
    /// max(U) − min(U), J.
    pub barrier: f64,
    /// rad
    pub period: f64,
    pub samples_per_period: usize,
    /// Two-sided Fourier coefficients `c_k` (J) of U in `e^{i6kΘ}`,
    /// k = 0..=samples_per_period/2; U is even so they are real.
    pub fourier: Vec<f64>,
    /// sqrt(U''(0) / I), rad/s.
    pub well_frequency: f64,
    /// The unconstrained equilibrium the grid was built from.
    pub equilibrium: IonCrystal,
}

impl RotorPotential {
    /// U at an arbitrary angle from the Fourier series, J.
    pub fn eval(&self, theta: f64) -> f64 {
        self.series(theta) - self.series(self.min_theta())
    }

    fn series(&self, theta: f64) -> f64 {
        let mut u = self.fourier[0];
        for (k, c) in self.fourier.iter().enumerate().skip(1) {
            let w = if 2 * k == self.samples_per_period { 1.0 } else { 2.0 };
            u += w * c * math::cos(6.0 * k as f64 * theta);
        }
        u
    }

    fn min_theta(&self) -> f64 {
        let (i, _) = self.u.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        self.theta_grid[i]
    }

    /// U''(Θ) at Θ = 0, J/rad².
    pub fn curvature_at_zero(&self) -> f64 {
        curvature(&self.fourier, self.samples_per_period)
    }
}

fn curvature(fourier: &[f64], samples: usize) -> f64 {
    fourier
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| {
            let w = if 2 * k == samples { 1.0 } else { 2.0 };
            let q = 6.0 * k as f64;
            -w * c * q * q
        })
        .sum()
}

/// Moment of inertia about the centroid in the crystal plane (kg·m²) and
/// r0 = sqrt(I / (N m)) (m). The plane is the one normal to the trap's
/// stiffest axis.
pub fn moment_of_inertia(crystal: &IonCrystal) -> (f64, f64) {
    let w = crystal.trap.omegas();
    let stiff = (0..3).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    let c = crystal.centroid();
    let m = crystal.trap.ion_mass;
    let inertia: f64 = crystal
        .positions
        .iter()
        .map(|p| (0..3).filter(|&d| d != stiff).map(|d| math::sq(p[d] - c[d])).sum::<f64>() * m)
        .sum();
    let r0 = math::sqrt(inertia / (crystal.n_ions() as f64 * m));
    (inertia, r0)
}

/// Orientation Θ of a planar crystal (rad, in (−π/3, π/3]), coordinates
/// in any consistent unit.
pub fn orientation(x: &[f64]) -> f64 {
    let (re, im) = cubic_sum(x);
    math::atan2(im, re) / 3.0
}

fn relative(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len() / 3;
    let (mut cx, mut cz) = (0.0, 0.0);
    for i in 0..n {
        cx += x[3 * i] / n as f64;
        cz += x[3 * i + 2] / n as f64;
    }
    (0..n).map(|i| (x[3 * i] - cx, x[3 * i + 2] - cz)).collect()
}

fn cubic_sum(x: &[f64]) -> (f64, f64) {
    relative(x).iter().fold((0.0, 0.0), |(re, im), &(a, b)| {
        // (a + ib)³ = a³ − 3ab² + i(3a²b − b³)
        (re + a * a * a - 3.0 * a * b * b, im + 3.0 * a * a * b - b * b * b)
    })
}

#[inline]
fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Constraint `c(x) = Im(e^{−3iΘ} Σ wⱼ³)` with its gradient and Hessian.
/// The second return is `Re(e^{−3iΘ} Σ wⱼ³)`, positive on the right branch.
fn orientation_constraint(x: &[f64], theta: f64) -> (f64, f64, Vec<f64>, Matrix) {
    let n = x.len() / 3;
    let beta = (math::cos(3.0 * theta), -math::sin(3.0 * theta));
    let w = relative(x);
    let s = cubic_sum(x);
    let bs = cmul(beta, s);
    let q = w.iter().fold((0.0, 0.0), |acc, &wk| {
        let sq = cmul(wk, wk);
        (acc.0 + sq.0, acc.1 + sq.1)
    });
    let mut grad = vec![0.0; 3 * n];
    for k in 0..n {
        let sq = cmul(w[k], w[k]);
        let ds = (3.0 * sq.0 - q.0, 3.0 * sq.1 - q.1);
        let b = cmul(beta, ds);
        grad[3 * k] = b.1; // Im(β dS)
        grad[3 * k + 2] = b.0; // Im(iβ dS) = Re(β dS)
    }
    let mut hess = Matrix::zeros(3 * n, 3 * n);
    for k in 0..n {
        for l in 0..n {
            // T_kl = 6 (w_k δ_kl − (w_k + w_l)/3), using Σ w = 0
            let delta = if k == l { 1.0 } else { 0.0 };
            let t = (
                6.0 * (w[k].0 * delta - (w[k].0 + w[l].0) / 3.0),
                6.0 * (w[k].1 * delta - (w[k].1 + w[l].1) / 3.0),
            );
            let bt = cmul(beta, t);
            hess[(3 * k, 3 * l)] = bt.1;
            hess[(3 * k, 3 * l + 2)] = bt.0;
            hess[(3 * k + 2, 3 * l)] = bt.0;
            hess[(3 * k + 2, 3 * l + 2)] = -bt.1;
        }
    }
    (bs.1, bs.0, grad, hess)
}

/// Result of one fixed-orientation relaxation (units of ℓ).
#[derive(Debug, Clone)]
pub struct ConstrainedMinimum {
    pub x: Vec<f64>,
    pub energy: f64,
    pub multiplier: f64,
    pub iterations: usize,
}

/// Minimizes the scaled trap potential with the orientation fixed at
/// `theta`, by Newton iteration on the Lagrange conditions. `start` should
/// already have orientation close to `theta`.
pub fn relax_at_orientation(trap: &TrapConfig, start: &[f64], theta: f64) -> Result<ConstrainedMinimum> {
    let pot = ScaledPotential::new(trap);
    let n = start.len();
    let mut x = start.to_vec();
    let mut g = vec![0.0; n];
    let mut h = Matrix::zeros(n, n);

    let residual = |x: &[f64], mu: f64, g: &mut [f64]| -> Result<(f64, f64)> {
        pot.gradient(x, g)?;
        let (c, _, cg, _) = orientation_constraint(x, theta);
        let r: f64 = g.iter().zip(&cg).map(|(gi, ci)| math::sq(gi + mu * ci)).sum();
        Ok((math::sqrt(r), c.abs()))
    };

    pot.gradient(&x, &mut g)?;
    let (_, _, cg0, _) = orientation_constraint(&x, theta);
    let mut mu = -linalg::dot(&cg0, &g) / linalg::dot(&cg0, &cg0).max(1e-300);

    let mut iterations = 0;
    loop {
        let (rg, rc) = residual(&x, mu, &mut g)?;
        if rg < KKT_GRADIENT_TOL && rc < KKT_CONSTRAINT_TOL {
            break;
        }
        if iterations >= KKT_MAX_ITER {
            return Err(Error::ConstrainedFailure { theta, residual: rg.max(rc) });
        }
        iterations += 1;
        pot.hessian(&x, &mut h)?;
        let (c, _, cg, ch) = orientation_constraint(&x, theta);
        let mut k = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = h[(i, j)] + mu * ch[(i, j)];
            }
            k[(i, n)] = cg[i];
            k[(n, i)] = cg[i];
        }
        let mut rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        rhs.push(-c);
        let sol = linalg::solve(&k, &rhs).ok_or(Error::ConstrainedFailure { theta, residual: rg.max(rc) })?;
        let merit = rg.max(rc);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&sol[..n]).map(|(xi, di)| xi + t * di).collect();
            let mu_t = (1.0 - t) * mu + t * sol[n];
            if let Ok((tg, tc)) = residual(&trial, mu_t, &mut g) {
                if tg.max(tc) < merit || tg.max(tc) < KKT_GRADIENT_TOL {
                    x = trial;
                    mu = mu_t;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::ConstrainedFailure { theta, residual: merit });
        }
    }

    // right branch, and a minimum rather than a saddle on the constraint surface
    let (_, branch, cg, ch) = orientation_constraint(&x, theta);
    if branch <= 0.0 {
        return Err(Error::ConstrainedFailure { theta, residual: branch });
    }
    pot.hessian(&x, &mut h)?;
    let nrm = linalg::norm(&cg);
    let u: Vec<f64> = cg.iter().map(|v| v / nrm).collect();
    let mut reduced = Matrix::zeros(n, n);
    let mut lag = h.clone();
    for i in 0..n {
        for j in 0..n {
            lag[(i, j)] += mu * ch[(i, j)];
        }
    }
    // P L P + u uᵀ with P = I − u uᵀ
    let lu = lag.mul_vec(&u);
    let ulu = linalg::dot(&u, &lu);
    for i in 0..n {
        for j in 0..n {
            reduced[(i, j)] = lag[(i, j)] - u[i] * lu[j] - lu[i] * u[j] + u[i] * u[j] * ulu + u[i] * u[j];
        }
    }
    let lowest = linalg::symmetric_eigen(&reduced).values[0];
    if lowest < -ZERO_MODE_TOL {
        return Err(Error::ConstrainedFailure { theta, residual: lowest });
    }
    let energy = pot.value(&x)?;
    Ok(ConstrainedMinimum { x, energy, multiplier: mu, iterations })
}

fn rotate_scaled(x: &[f64], angle: f64) -> Vec<f64> {
    let n = x.len() / 3;
    let (s, c) = (math::sin(angle), math::cos(angle));
    let (mut cx, mut cz) = (0.0, 0.0);
    for i in 0..n {
        cx += x[3 * i] / n as f64;
        cz += x[3 * i + 2] / n as f64;
    }
    let mut out = x.to_vec();
    for i in 0..n {
        let (dx, dz) = (x[3 * i] - cx, x[3 * i + 2] - cz);
        out[3 * i] = cx + c * dx - s * dz;
        out[3 * i + 2] = cz + s * dx + c * dz;
    }
    out
}

/// Checks that the trap holds a planar three-ion crystal in the x–z plane
/// and returns its lowest-energy equilibrium.
pub fn planar_equilibrium(trap: &TrapConfig) -> Result<IonCrystal> {
    trap.validate()?;
    if trap.n_ions != 3 {
        return Err(Error::InvalidInput("the rotor model needs exactly three ions"));
    }
    let eq = find_equilibrium(trap, None)?;
    let l = trap.length_unit();
    if eq.is_collinear() || eq.positions.iter().any(|p| p[1].abs() > 1e-6 * l) {
        return Err(Error::NotPlanar);
    }
    Ok(eq)
}

/// Relaxed energy (J, not offset) of the crystal held at orientation
/// `theta`, starting from `eq` rotated rigidly into place.
pub fn orientation_energy(eq: &IonCrystal, theta: f64) -> Result<f64> {
    let x0 = eq.scaled_coordinates();
    let start = rotate_scaled(&x0, theta - orientation(&x0));
    let m = relax_at_orientation(&eq.trap, &start, theta)?;
    Ok(m.energy * eq.trap.energy_unit())
}

/// Samples U(Θ) over one period π/3 at `samples_per_period` points,
/// replicates it over [0, 2π), and attaches the inertia of the
/// equilibrium crystal.
pub fn rotor_potential<E: Executor>(trap: &TrapConfig, samples_per_period: usize, exec: &E) -> Result<RotorPotential> {
    if samples_per_period < MIN_SAMPLES {
        return Err(Error::InvalidInput("need at least 64 samples per period"));
    }
    let eq = planar_equilibrium(trap)?;
    let thetas: Vec<f64> = (0..samples_per_period).map(|k| k as f64 * PERIOD / samples_per_period as f64).collect();
    let energies: Vec<f64> = exec
        .map(&thetas, |th| orientation_energy(&eq, th))
        .into_iter()
        .collect::<Result<_>>()?;
    let emin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let period_u: Vec<f64> = energies.iter().map(|e| e - emin).collect();
    let barrier = period_u.iter().copied().fold(0.0, f64::max);

    let n = samples_per_period;
    let fourier: Vec<f64> = (0..=n / 2)
        .map(|k| {
            period_u
                .iter()
                .enumerate()
                .map(|(j, u)| u * math::cos(2.0 * PI * (k * j) as f64 / n as f64))
                .sum::<f64>()
                / n as f64
        })
        .collect();

    let theta_grid: Vec<f64> = (0..6 * n).map(|k| k as f64 * PERIOD / n as f64).collect();
    let u: Vec<f64> = (0..6 * n).map(|k| period_u[k % n]).collect();
    let (inertia, r0) = moment_of_inertia(&eq);
    let curv = curvature(&fourier, n);
    let well_frequency = math::sqrt(curv.max(0.0) / inertia);
    Ok(RotorPotential {
        theta_grid,
        u,
        r0,
        inertia,
        barrier,
        period: PERIOD,
        samples_per_period: n,
        fourier,
        well_frequency,
        equilibrium: eq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::angular;
    use crate::Sequential;

    #[test]
    fn orientation_follows_rigid_rotation() {
        let eq = planar_equilibrium(&TrapConfig::experimental()).unwrap();
        let x = eq.scaled_coordinates();
        let t0 = orientation(&x);
        for d in [0.1, -0.3, 0.7] {
            let t = orientation(&rotate_scaled(&x, d));
            let diff = (t - t0 - d).rem_euclid(2.0 * PI / 3.0);
            assert!(diff < 1e-12 || (2.0 * PI / 3.0 - diff) < 1e-12, "{d}: {t} vs {t0}");
        }
    }

    #[test]
    fn orientation_ignores_relabelling() {
        let eq = planar_equilibrium(&TrapConfig::experimental()).unwrap();
        let x = eq.scaled_coordinates();
        let mut y = x.clone();
        y[..3].copy_from_slice(&x[6..9]);
        y[6..9].copy_from_slice(&x[..3]);
        assert!((orientation(&x) - orientation(&y)).abs() < 1e-14);
    }

    #[test]
    fn constraint_derivatives_match_finite_differences() {
        let eq = planar_equilibrium(&TrapConfig::experimental()).unwrap();
        let x: Vec<f64> = eq
            .scaled_coordinates()
            .iter()
            .enumerate()
            .map(|(i, v)| v + 0.01 * ((i * 7 % 5) as f64 - 2.0))
            .collect();
        let theta = 0.2;
        let (_, _, g, h) = orientation_constraint(&x, theta);
        let step = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            let (cp, _, gp, _) = orientation_constraint(&xp, theta);
            let (cm, _, gm, _) = orientation_constraint(&xm, theta);
            assert!(((cp - cm) / (2.0 * step) - g[i]).abs() < 1e-8);
            for j in 0..x.len() {
                assert!(((gp[j] - gm[j]) / (2.0 * step) - h[(i, j)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn chain_regime_is_rejected() {
        let trap = TrapConfig::experimental().with_omega_x(angular(2.1e6));
        assert_eq!(rotor_potential(&trap, 64, &Sequential).unwrap_err(), Error::NotPlanar);
        assert!(rotor_potential(&TrapConfig::experimental(), 32, &Sequential).is_err());
    }

    #[test]
    fn isotropic_plane_is_flat() {
        let mut trap = TrapConfig::experimental();
        trap.omega_x = trap.omega_z;
        let rp = rotor_potential(&trap, 64, &Sequential).unwrap();
        // flat to round-off in the total energy
        assert!(rp.barrier < 1e-14 * rp.equilibrium.energy.abs(), "{}", rp.barrier);
    }

    #[test]
    fn equilateral_inertia() {
        let mut trap = TrapConfig::experimental();
        trap.omega_x = trap.omega_z;
        let eq = planar_equilibrium(&trap).unwrap();
        let r = trap.length_unit() / math::powf(3.0, 1.0 / 6.0);
        let (i, r0) = moment_of_inertia(&eq);
        assert!((i - 3.0 * trap.ion_mass * r * r).abs() < 1e-9 * i);
        assert!((r0 - r).abs() < 1e-9 * r);
    }
}
