//! Flux-threaded rotor spectrum and tunnelling dynamics.
//!
//! The rotor Hamiltonian is `H = (ħ²/2I)(−i d/dΘ − α)² + U(Θ)` with
//! `α = 3Φ/φ₀`: each of the three ions encloses the flux once per turn.
//! Cyclic relabelling of identical ions identifies Θ with Θ + 2π/3, so
//! wavefunctions are expanded in `e^{i3nΘ}`. With U of period π/3 there are
//! two wells (up, down) per 2π/3 and a hop between them picks up phase
//! `πΦ/φ₀`, which makes the lowest doublet splitting follow
//! `ν₀ |cos(πΦ/φ₀)|` in the tight-binding limit.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::consts::{HBAR, PLANCK};
use crate::crystal::TrapConfig;
use crate::exec::Executor;
use crate::linalg::{self, Matrix};
use crate::math;
use crate::rotor::{rotor_potential, RotorPotential};
use crate::{Error, Result, Sequential};

pub const MIN_BASIS: usize = 33;
pub const DEFAULT_BASIS: usize = 41;
/// Number of levels kept in a [`TunnellingSolution`].
pub const KEPT_LEVELS: usize = 8;
/// Largest allowed weight in the outermost plane waves.
pub const EDGE_WEIGHT_TOL: f64 = 1e-8;
const EDGE_WIDTH: usize = 2;
const CHECKED_STATES: usize = 4;

/// Low-lying spectrum of the rotor at one flux.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TunnellingSolution {
    /// Φ/φ₀
    pub flux_quanta: f64,
    /// Lowest levels, J, above the potential minimum, ascending.
    pub levels: Vec<f64>,
    /// E₁ − E₀, J.
    pub splitting: f64,
    /// splitting / h, Hz.
    pub nu: f64,
    /// Hop magnitude J (Hz) of the two-orientation model, ν₀ / 4.
    pub j_amp: f64,
    pub basis_size: usize,
    /// Largest weight of any kept low state in the outermost plane waves.
    pub edge_weight: f64,
    /// Largest eigen-residual ‖Hv − Ev‖ relative to the spectral radius.
    pub relative_residual: f64,
}

/// Parameters of the measured transition probability.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DynamicsModel {
    /// Population of the rotational ground state.
    pub p0: f64,
    /// Tunnelling frequency at zero flux, Hz.
    pub nu: f64,
    /// Coherence time, s.
    pub t2: f64,
    /// Classical rotation rate of excited states, 1/s.
    pub v: f64,
}

impl DynamicsModel {
    /// p0 = 0.10, ν = 7.6 Hz, T2 = 300 ms, v = 5.4 s⁻¹.
    pub fn published() -> Self {
        DynamicsModel { p0: 0.10, nu: 7.6, t2: 0.3, v: 5.4 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(Error::InvalidInput("p0 must lie in [0, 1]"));
        }
        if !(self.nu >= 0.0 && self.v >= 0.0) || !self.nu.is_finite() || !self.v.is_finite() {
            return Err(Error::InvalidInput("nu and v must be non-negative"));
        }
        if !(self.t2 > 0.0) {
            return Err(Error::InvalidInput("T2 must be positive"));
        }
        Ok(())
    }

    /// ν(Φ) = ν₀ |cos(πΦ/φ₀)|, Hz.
    pub fn nu_at(&self, flux_quanta: f64) -> f64 {
        self.nu * math::cos(PI * flux_quanta).abs()
    }
}

/// ħ²/(2I) in Hz.
pub fn rotational_constant_hz(inertia: f64) -> f64 {
    HBAR * HBAR / (2.0 * inertia) / PLANCK
}

struct Spectrum {
    values: Vec<f64>,
    edge_weight: f64,
    relative_residual: f64,
}

fn diagonalize(rotor: &RotorPotential, alpha: f64, basis_size: usize) -> Spectrum {
    let b = rotational_constant_hz(rotor.inertia);
    let k = (basis_size - 1) / 2;
    let centre = math::round(alpha / 3.0) as i64;
    let ns: Vec<i64> = (0..basis_size as i64).map(|i| centre - k as i64 + i).collect();
    let coeff = |d: i64| -> f64 {
        if d % 2 != 0 {
            return 0.0;
        }
        rotor.fourier.get((d / 2).unsigned_abs() as usize).map_or(0.0, |c| c / PLANCK)
    };
    let h = Matrix::from_fn(basis_size, basis_size, |i, j| {
        let mut v = coeff(ns[i] - ns[j]);
        if i == j {
            let q = 3.0 * ns[i] as f64 - alpha;
            v += b * q * q;
        }
        v
    });
    let eig = linalg::symmetric_eigen(&h);
    let radius = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut edge_weight = 0.0f64;
    let mut residual = 0.0f64;
    for s in 0..CHECKED_STATES.min(basis_size) {
        let v = eig.vector(s);
        let edge: f64 = v[..EDGE_WIDTH].iter().chain(&v[basis_size - EDGE_WIDTH..]).map(|c| c * c).sum();
        edge_weight = edge_weight.max(edge);
        let hv = h.mul_vec(&v);
        let r: f64 = hv.iter().zip(&v).map(|(a, c)| math::sq(a - eig.values[s] * c)).sum();
        residual = residual.max(math::sqrt(r) / radius);
    }
    Spectrum { values: eig.values, edge_weight, relative_residual: residual }
}

fn check_basis(basis_size: usize) -> Result<()> {
    if basis_size < MIN_BASIS || basis_size % 2 == 0 {
        return Err(Error::InvalidInput("basis size must be odd and at least 33"));
    }
    Ok(())
}

/// Diagonalizes the flux-threaded rotor in `basis_size` plane waves
/// centred on the flux's nearest integer, and returns the lowest levels
/// with the doublet splitting.
pub fn band_levels(rotor: &RotorPotential, flux_quanta: f64, basis_size: usize) -> Result<TunnellingSolution> {
    check_basis(basis_size)?;
    if !flux_quanta.is_finite() {
        return Err(Error::InvalidInput("flux must be finite"));
    }
    let spec = diagonalize(rotor, 3.0 * flux_quanta, basis_size);
    if spec.edge_weight > EDGE_WEIGHT_TOL {
        return Err(Error::BasisNotConverged { basis_size, edge_weight: spec.edge_weight });
    }
    let zero = if flux_quanta == 0.0 { None } else { Some(diagonalize(rotor, 0.0, basis_size)) };
    let nu0 = match &zero {
        None => spec.values[1] - spec.values[0],
        Some(z) => z.values[1] - z.values[0],
    };
    let levels: Vec<f64> = spec.values.iter().take(KEPT_LEVELS).map(|e| e * PLANCK).collect();
    let splitting = (levels[1] - levels[0]).max(0.0);
    Ok(TunnellingSolution {
        flux_quanta,
        splitting,
        nu: splitting / PLANCK,
        j_amp: nu0 / 4.0,
        levels,
        basis_size,
        edge_weight: spec.edge_weight,
        relative_residual: spec.relative_residual,
    })
}

/// (Φ/φ₀, ν in Hz) for each flux.
pub fn tunnelling_rate_vs_flux<E: Executor>(
    rotor: &RotorPotential,
    fluxes: &[f64],
    basis_size: usize,
    exec: &E,
) -> Result<Vec<(f64, f64)>> {
    check_basis(basis_size)?;
    exec.map(fluxes, |f| band_levels(rotor, f, basis_size).map(|s| (f, s.nu))).into_iter().collect()
}

/// Probability of finding the other orientation after waiting `tau` (s)
/// at flux Φ/φ₀:
///
/// `p0 (1 − e^{−(τ/T2)²} cos(2πν(Φ)τ))/2 + (1 − p0)(1 − e^{−vτ})/2`
/// with `ν(Φ) = ν₀|cos(πΦ/φ₀)|`.
pub fn transition_probability(flux_quanta: f64, tau: f64, model: &DynamicsModel) -> Result<f64> {
    model.validate()?;
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput("waiting time must be a non-negative number"));
    }
    let nu = model.nu_at(flux_quanta);
    let decay = math::exp(-math::sq(tau / model.t2));
    let coherent = 0.5 * (1.0 - decay * math::cos(2.0 * PI * nu * tau));
    let classical = -0.5 * math::expm1(-model.v * tau);
    Ok(model.p0 * coherent + (1.0 - model.p0) * classical)
}

/// Relative golden-rule transition rate `|cos(πΦ/φ₀)|² = [1 + cos(2πΦ/φ₀)]/2`.
pub fn golden_rule_envelope(flux_quanta: f64) -> f64 {
    0.5 * (1.0 + math::cos(2.0 * PI * flux_quanta))
}

/// Tunnelling-frequency jitter from confinement noise and the coherence
/// time it allows: `δν = |slope| · rms`, `T2 = 1/(π δν)`. Zero noise gives
/// an infinite T2.
pub fn coherence_from_confinement_noise(slope: f64, rms: f64) -> Result<(f64, f64)> {
    if !(slope.is_finite() && rms.is_finite() && rms >= 0.0) {
        return Err(Error::InvalidInput("slope and rms must be finite, rms non-negative"));
    }
    let delta_nu = slope.abs() * rms;
    let t2 = if delta_nu == 0.0 { f64::INFINITY } else { 1.0 / (PI * delta_nu) };
    Ok((delta_nu, t2))
}

/// One point of a tunnelling-rate scan over ωx − ωz.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatePoint {
    /// ωx − ωz, rad/s.
    pub delta: f64,
    /// ν at zero flux, Hz.
    pub nu: f64,
    /// J
    pub barrier: f64,
    /// rad/s
    pub well_frequency: f64,
    /// Ground level above the potential minimum, J.
    pub ground_level: f64,
}

/// Full crystal → rotor → spectrum pipeline at each ωx − ωz in `deltas`
/// (rad/s), zero flux.
pub fn rate_vs_confinement<E: Executor>(
    template: &TrapConfig,
    deltas: &[f64],
    samples_per_period: usize,
    basis_size: usize,
    exec: &E,
) -> Result<Vec<RatePoint>> {
    check_basis(basis_size)?;
    exec.map(deltas, |d| {
        let trap = template.with_omega_x(template.omega_z + d);
        let rotor = rotor_potential(&trap, samples_per_period, &Sequential)?;
        let sol = band_levels(&rotor, 0.0, basis_size)?;
        Ok(RatePoint {
            delta: d,
            nu: sol.nu,
            barrier: rotor.barrier,
            well_frequency: rotor.well_frequency,
            ground_level: sol.levels[0],
        })
    })
    .into_iter()
    .collect()
}

/// dν / d((ωx − ωz)/2π) in Hz per Hz, by central differences on a scan
/// (one-sided at the ends).
pub fn rate_slopes(points: &[RatePoint]) -> Vec<f64> {
    let n = points.len();
    let f = |p: &RatePoint| p.delta / (2.0 * PI);
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                _ if n < 2 => return 0.0,
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (points[b].nu - points[a].nu) / (f(&points[b]) - f(&points[a]))
        })
        .collect()
}
