//! Shot-noise simulation of the orientation-correlation measurement and
//! weighted nonlinear least-squares fits of the two measurement models.
//!
//! Random numbers come from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded with
//! `seed_from_u64(seed)`; point `i` of a scan draws from stream `i`. A
//! binomial count is the number of `next_u64()` values below
//! `floor(p · 2⁶⁴)` among `shots` draws, so results are bit-identical on
//! every platform.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::{self, Matrix};
use crate::math;
use crate::quantum::{transition_probability, DynamicsModel};
use crate::{Error, Result};

/// Default waiting time of a flux scan, s.
pub const FLUX_SCAN_TAU: f64 = 0.05;
/// Default flux (in quanta) with the coil off.
pub const FLUX_OFFSET: f64 = 1.52;
pub const TIME_SCAN_SHOTS: u64 = 400;
pub const FLUX_SCAN_SHOTS: u64 = 800;

/// Measured or simulated success counts on a scan axis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShotSeries {
    /// Waiting times (s) or coil flux settings (quanta).
    pub axis: Vec<f64>,
    pub shots: u64,
    pub successes: Vec<u64>,
    pub probabilities: Vec<f64>,
    /// sqrt(p(1−p)/shots), or 3/shots where p is 0 or 1.
    pub errors: Vec<f64>,
}

impl ShotSeries {
    pub fn from_counts(axis: Vec<f64>, successes: Vec<u64>, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidInput("shots per point must be at least 1"));
        }
        if axis.len() != successes.len() {
            return Err(Error::InvalidInput("axis and counts differ in length"));
        }
        if successes.iter().any(|&s| s > shots) {
            return Err(Error::InvalidInput("more successes than shots"));
        }
        if axis.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("axis values must be finite"));
        }
        let probabilities: Vec<f64> = successes.iter().map(|&s| s as f64 / shots as f64).collect();
        let errors = probabilities.iter().map(|&p| binomial_sigma(p, shots)).collect();
        Ok(ShotSeries { axis, shots, successes, probabilities, errors })
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }
}

/// Standard deviation of a binomial proportion, with the rule-of-three
/// bound at the edges so no point carries infinite weight.
pub fn binomial_sigma(p: f64, shots: u64) -> f64 {
    let n = shots as f64;
    if p <= 0.0 || p >= 1.0 {
        3.0 / n
    } else {
        math::sqrt(p * (1.0 - p) / n)
    }
}

/// Number of successes in `shots` Bernoulli(p) draws.
pub fn sample_binomial(rng: &mut impl RngCore, p: f64, shots: u64) -> u64 {
    if !(p > 0.0) {
        return 0;
    }
    if p >= 1.0 {
        return shots;
    }
    // p · 2⁶⁴ < 2⁶⁴ here, so the cast does not saturate
    let threshold = (p * 18_446_744_073_709_551_616.0) as u64;
    (0..shots).filter(|_| rng.next_u64() < threshold).count() as u64
}

fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn simulate(axis: &[f64], shots: u64, seed: u64, prob: impl Fn(f64) -> Result<f64>) -> Result<ShotSeries> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots per point must be at least 1"));
    }
    let mut successes = Vec::with_capacity(axis.len());
    for (i, &x) in axis.iter().enumerate() {
        let p = prob(x)?;
        successes.push(sample_binomial(&mut point_rng(seed, i), p, shots));
    }
    ShotSeries::from_counts(axis.to_vec(), successes, shots)
}

/// Counts at each waiting time (s) with the flux held at `flux_quanta`.
pub fn simulate_time_scan(model: &DynamicsModel, flux_quanta: f64, taus: &[f64], shots: u64, seed: u64) -> Result<ShotSeries> {
    model.validate()?;
    simulate(taus, shots, seed, |t| transition_probability(flux_quanta, t, model))
}

/// Counts at each coil setting `n` (flux quanta added to `flux_offset`),
/// all at waiting time `tau` (s).
pub fn simulate_flux_scan(
    model: &DynamicsModel,
    settings: &[f64],
    flux_offset: f64,
    tau: f64,
    shots: u64,
    seed: u64,
) -> Result<ShotSeries> {
    model.validate()?;
    simulate(settings, shots, seed, |n| transition_probability(flux_offset + n, tau, model))
}

/// Time-scan model `f(p0, ν, T2, v; t)`.
pub fn time_model(p: &[f64], t: f64) -> f64 {
    let (p0, nu, t2, v) = (p[0], p[1], p[2], p[3]);
    let coherent = 0.5 * (1.0 - math::exp(-math::sq(t / t2)) * math::cos(2.0 * PI * nu * t));
    p0 * coherent + (1.0 - p0) * 0.5 * (1.0 - math::exp(-v * t))
}

/// Flux-scan model `g(a, ξ, θ0, h; n) = (a/2) cos(2πξn + θ0) + h`.
pub fn flux_model(p: &[f64], n: f64) -> f64 {
    0.5 * p[0] * math::cos(2.0 * PI * p[1] * n + p[2]) + p[3]
}

pub const TIME_PARAMS: [&str; 4] = ["p0", "nu", "t2", "v"];
pub const FLUX_PARAMS: [&str; 4] = ["a", "xi", "theta0", "h"];

/// Outcome of a weighted least-squares fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// (JᵀWJ)⁻¹ at the optimum, rows of a symmetric matrix.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residual sum of squares χ².
    pub rss: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.std_errors[i])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Stop when an accepted step lowers χ² by less than this fraction.
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Damping beyond which the fit gives up.
    pub max_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { rel_tol: 1e-10, max_iterations: 500, max_damping: 1e16 }
    }
}

fn chi2<F: Fn(&[f64], f64) -> f64>(model: &F, p: &[f64], x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(y).zip(w).map(|((xi, yi), wi)| wi * math::sq(yi - model(p, *xi))).sum()
}

/// Model Jacobian by forward differences, rows per data point.
fn jacobian<F: Fn(&[f64], f64) -> f64>(model: &F, p: &[f64], x: &[f64]) -> Matrix {
    let m = p.len();
    let base: Vec<f64> = x.iter().map(|&xi| model(p, xi)).collect();
    let mut jac = Matrix::zeros(x.len(), m);
    let mut q = p.to_vec();
    for j in 0..m {
        let h = 1.5e-8 * p[j].abs().max(1e-3);
        q[j] = p[j] + h;
        let h = q[j] - p[j];
        for (i, &xi) in x.iter().enumerate() {
            jac[(i, j)] = (model(&q, xi) - base[i]) / h;
        }
        q[j] = p[j];
    }
    jac
}

fn normal_matrix(jac: &Matrix, w: &[f64]) -> Matrix {
    let m = jac.cols();
    Matrix::from_fn(m, m, |a, b| (0..jac.rows()).map(|i| w[i] * jac[(i, a)] * jac[(i, b)]).sum())
}

/// Levenberg–Marquardt minimization of `Σ wᵢ (yᵢ − model(p, xᵢ))²`.
///
/// The first step is an undamped Gauss–Newton step, so a model linear in
/// its parameters is solved at once. Rejected or singular steps raise the
/// damping tenfold; accepted steps lower it. The covariance is
/// `(JᵀWJ)⁻¹` at the optimum, not rescaled by χ².
pub fn weighted_nlls<F: Fn(&[f64], f64) -> f64>(
    model: F,
    names: &[&str],
    initial: &[f64],
    x: &[f64],
    y: &[f64],
    w: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    let m = initial.len();
    if names.len() != m || m == 0 {
        return Err(Error::InvalidInput("one name per parameter is required"));
    }
    if x.len() != y.len() || x.len() != w.len() || x.len() < m {
        return Err(Error::InvalidInput("need matching data and at least as many points as parameters"));
    }
    let finite = x.iter().chain(y).chain(w).chain(initial).all(|v| v.is_finite());
    if !finite || w.iter().any(|&wi| wi < 0.0) {
        return Err(Error::InvalidInput("data must be finite and weights non-negative"));
    }

    let mut p = initial.to_vec();
    let mut f = chi2(&model, &p, x, y, w);
    if !f.is_finite() {
        return Err(Error::InvalidInput("model is not finite at the initial parameters"));
    }
    let mut lambda = 0.0f64;
    let mut iterations = 0;
    let mut converged = false;
    let mut warnings = Vec::new();

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&model, &p, x);
        let jtj = normal_matrix(&jac, w);
        let grad: Vec<f64> = (0..m)
            .map(|a| (0..x.len()).map(|i| w[i] * jac[(i, a)] * (y[i] - model(&p, x[i]))).sum())
            .collect();
        if f == 0.0 || linalg::norm(&grad) == 0.0 {
            converged = true;
            break;
        }
        let mut stepped = false;
        while lambda <= opts.max_damping {
            let a = Matrix::from_fn(m, m, |r, c| {
                let d = if r == c { lambda * jtj[(r, r)].max(1e-300) } else { 0.0 };
                jtj[(r, c)] + d
            });
            let trial_p = match linalg::solve(&a, &grad) {
                Some(delta) if delta.iter().all(|d| d.is_finite()) => {
                    p.iter().zip(&delta).map(|(pi, di)| pi + di).collect::<Vec<f64>>()
                }
                _ => {
                    lambda = if lambda == 0.0 { 1e-3 } else { lambda * 10.0 };
                    continue;
                }
            };
            let ft = chi2(&model, &trial_p, x, y, w);
            if ft.is_finite() && ft <= f {
                let drop = f - ft;
                p = trial_p;
                f = ft;
                lambda *= 0.1;
                if lambda < 1e-12 {
                    lambda = 0.0;
                }
                stepped = true;
                if drop <= opts.rel_tol * f.max(f64::MIN_POSITIVE) {
                    converged = true;
                }
                break;
            }
            lambda = if lambda == 0.0 { 1e-3 } else { lambda * 10.0 };
        }
        if !stepped {
            // no damping level lowers χ²: already at the minimum to round-off
            // unless the normal equations were singular throughout
            if linalg::solve(&jtj, &grad).is_some() {
                converged = true;
            } else {
                warnings.push(format!("damping exceeded {:e}", opts.max_damping));
            }
            break;
        }
        if converged {
            break;
        }
    }
    if !converged && warnings.is_empty() {
        warnings.push(format!("no convergence after {iterations} iterations"));
    }

    let jac = jacobian(&model, &p, x);
    let jtj = normal_matrix(&jac, w);
    let cov = match linalg::spd_inverse(&jtj) {
        Some(inv) => inv,
        None => {
            warnings.push("normal matrix is singular; errors unavailable".to_string());
            Matrix::from_fn(m, m, |_, _| f64::NAN)
        }
    };
    let covariance: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|c| 0.5 * (cov[(r, c)] + cov[(c, r)])).collect()).collect();
    let std_errors = (0..m).map(|k| math::sqrt(covariance[k][k].max(0.0))).collect();
    Ok(FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        values: p,
        std_errors,
        covariance,
        rss: f,
        converged,
        iterations,
        warnings,
    })
}

fn weights(series: &ShotSeries) -> Vec<f64> {
    series.errors.iter().map(|s| 1.0 / (s * s)).collect()
}

fn better(a: Option<FitResult>, b: FitResult) -> Option<FitResult> {
    match a {
        Some(a) if a.rss <= b.rss || !b.rss.is_finite() => Some(a),
        _ => Some(b),
    }
}

/// Fits `f(p0, ν, T2, v)` to a time scan, starting from each ν in
/// 0.5–30 Hz (0.5 Hz steps) and keeping the lowest χ².
pub fn fit_time_scan(series: &ShotSeries) -> Result<FitResult> {
    if series.len() < 8 {
        return Err(Error::InvalidInput("a time-scan fit needs at least 8 points"));
    }
    let w = weights(series);
    let span = series.axis.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - series.axis.iter().copied().fold(f64::INFINITY, f64::min);
    if !(span > 0.0) {
        return Err(Error::InvalidInput("time axis must span a nonzero interval"));
    }
    // late-time level fixes the classical rate: (1 − e^{−vt})/2 ≈ p
    let (tl, pl) = late_average(series);
    let v0 = if pl > 0.0 && pl < 0.5 && tl > 0.0 { -math::ln(1.0 - 2.0 * pl) / tl } else { 1.0 / span };
    // on a uniform grid, ν and k/Δt ± ν fit equally well; keep the principal one
    let nyquist = 0.5 / min_spacing(&series.axis);
    let mut best: Option<FitResult> = None;
    for k in 1..=60 {
        let nu = 0.5 * k as f64;
        let start = [0.2, nu, 0.5 * span, v0];
        if let Ok(fit) = weighted_nlls(time_model, &TIME_PARAMS, &start, &series.axis, &series.probabilities, &w, &FitOptions::default()) {
            if fit.values[1].abs() <= nyquist {
                best = better(best, fit);
            }
        }
    }
    let mut fit = best.ok_or(Error::NotConverged { iterations: 0, gradient_norm: f64::NAN })?;
    // f depends on ν and T2 only through ν² and T2²
    for k in [1, 2] {
        if fit.values[k] < 0.0 {
            fit.values[k] = -fit.values[k];
            flip_covariance(&mut fit, &[k]);
        }
    }
    if fit.values[1] * span < 1.0 {
        fit.warnings.push("scan covers less than one oscillation period".to_string());
    }
    Ok(fit)
}

fn min_spacing(axis: &[f64]) -> f64 {
    let mut sorted = axis.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min)
}

fn late_average(series: &ShotSeries) -> (f64, f64) {
    let n = series.len();
    let from = n - (n / 4).max(1);
    let k = (n - from) as f64;
    let t = series.axis[from..].iter().sum::<f64>() / k;
    let p = series.probabilities[from..].iter().sum::<f64>() / k;
    (t, p)
}

/// Fits `g(a, ξ, θ0, h)` to a flux scan from a grid of ξ and θ0 starts.
/// The result has `a ≥ 0`, `ξ ≥ 0` and `θ0` in (−π, π].
pub fn fit_flux_scan(series: &ShotSeries) -> Result<FitResult> {
    if series.len() < 8 {
        return Err(Error::InvalidInput("a flux-scan fit needs at least 8 points"));
    }
    let w = weights(series);
    let lo = series.axis.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.axis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return Err(Error::InvalidInput("flux axis must span a nonzero interval"));
    }
    let pmax = series.probabilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pmin = series.probabilities.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = series.probabilities.iter().sum::<f64>() / series.len() as f64;
    // ξ starts up to half the Nyquist frequency; fits beyond Nyquist are aliases
    let nyquist = 0.5 / min_spacing(&series.axis);
    let xi_max = 0.5 * nyquist;
    let mut best: Option<FitResult> = None;
    let mut xi = 0.25 / span;
    while xi <= xi_max {
        for q in 0..4 {
            let start = [pmax - pmin, xi, 0.5 * PI * q as f64, mean];
            if let Ok(fit) = weighted_nlls(flux_model, &FLUX_PARAMS, &start, &series.axis, &series.probabilities, &w, &FitOptions::default()) {
                if fit.values[1].abs() <= nyquist {
                    best = better(best, fit);
                }
            }
        }
        xi *= 1.1;
    }
    let mut fit = best.ok_or(Error::NotConverged { iterations: 0, gradient_norm: f64::NAN })?;
    normalize_flux_fit(&mut fit);
    if fit.values[1] * span < 1.5 {
        fit.warnings.push("scan covers less than 1.5 periods".to_string());
    }
    if 0.5 * fit.values[0] + fit.values[3] > 1.0 {
        fit.warnings.push("a/2 + h exceeds 1".to_string());
    }
    Ok(fit)
}

fn normalize_flux_fit(fit: &mut FitResult) {
    let v = &mut fit.values;
    if v[1] < 0.0 {
        // cos(−2πξn + θ) = cos(2πξn − θ)
        v[1] = -v[1];
        v[2] = -v[2];
        flip_covariance(fit, &[1, 2]);
    }
    let v = &mut fit.values;
    if v[0] < 0.0 {
        v[0] = -v[0];
        v[2] += PI;
        flip_covariance(fit, &[0]);
    }
    let v = &mut fit.values;
    v[2] = wrap_angle(v[2]);
}

/// Angle in (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let t = a - 2.0 * PI * math::floor((a + PI) / (2.0 * PI));
    if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Covariance after negating the listed parameters.
fn flip_covariance(fit: &mut FitResult, flipped: &[usize]) {
    let m = fit.values.len();
    for r in 0..m {
        for c in 0..m {
            if flipped.contains(&r) != flipped.contains(&c) {
                fit.covariance[r][c] = -fit.covariance[r][c];
            }
        }
    }
}
