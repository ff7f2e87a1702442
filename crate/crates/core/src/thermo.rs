//! Thermal occupation of a motional mode, adiabatic frequency ramps, and
//! sideband-asymmetry thermometry.

use alloc::vec::Vec;

use crate::consts::{BOLTZMANN, HBAR};
use crate::math;
use crate::{Error, Result};

/// Ramps with |dω/dt| / ω² above this are flagged as non-adiabatic.
pub const ADIABATICITY_LIMIT: f64 = 0.1;

/// A mode in thermal equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThermalState {
    /// rad/s
    pub omega: f64,
    /// K
    pub temperature: f64,
    pub nbar: f64,
    /// 1 / (1 + n̄)
    pub ground_population: f64,
}

impl ThermalState {
    pub fn from_temperature(omega: f64, temperature: f64) -> Result<Self> {
        let nbar = nbar_from_temperature(omega, temperature)?;
        Ok(ThermalState { omega, temperature, nbar, ground_population: 1.0 / (1.0 + nbar) })
    }

    pub fn from_nbar(omega: f64, nbar: f64) -> Result<Self> {
        let temperature = temperature_from_nbar(omega, nbar)?;
        Ok(ThermalState { omega, temperature, nbar, ground_population: 1.0 / (1.0 + nbar) })
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidInput("mode frequency must be positive"));
    }
    Ok(())
}

/// Bose–Einstein occupation `1 / (exp(ħω/k_B T) − 1)`.
pub fn nbar_from_temperature(omega: f64, temperature: f64) -> Result<f64> {
    check_omega(omega)?;
    if !(temperature >= 0.0) {
        return Err(Error::InvalidInput("temperature must be non-negative"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / math::expm1(HBAR * omega / (BOLTZMANN * temperature)))
}

/// Inverse of [`nbar_from_temperature`]: `ħω / (k_B ln(1 + 1/n̄))`.
pub fn temperature_from_nbar(omega: f64, nbar: f64) -> Result<f64> {
    check_omega(omega)?;
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidInput("mean phonon number must be non-negative"));
    }
    if nbar == 0.0 {
        return Ok(0.0);
    }
    Ok(HBAR * omega / (BOLTZMANN * math::ln_1p(1.0 / nbar)))
}

/// Highest temperature (K) at which the thermal ground-state population
/// is still at least `p0_min`.
pub fn ground_state_threshold(omega: f64, p0_min: f64) -> Result<f64> {
    if !(p0_min > 0.0 && p0_min < 1.0) {
        return Err(Error::InvalidInput("ground-state population must lie in (0, 1)"));
    }
    temperature_from_nbar(omega, 1.0 / p0_min - 1.0)
}

/// Initial condition of a ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RampStart {
    /// K, at the first frequency of the schedule.
    Temperature(f64),
    Nbar(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RampPoint {
    /// s
    pub t: f64,
    /// rad/s
    pub omega: f64,
    pub nbar: f64,
    /// K
    pub temperature: f64,
    /// |dω/dt| / ω²
    pub adiabaticity: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RampProfile {
    pub points: Vec<RampPoint>,
    /// Some point exceeds [`ADIABATICITY_LIMIT`].
    pub non_adiabatic: bool,
}

impl RampProfile {
    pub fn last(&self) -> &RampPoint {
        self.points.last().expect("ramp has at least one point")
    }
}

/// Follows a mode through the frequency schedule `omegas` (rad/s) sampled
/// at `times` (s). Occupation is conserved by the ideal ramp, so T ∝ ω;
/// `heating_quanta` phonons are added linearly in time over the ramp.
pub fn adiabatic_ramp(times: &[f64], omegas: &[f64], start: RampStart, heating_quanta: f64) -> Result<RampProfile> {
    if times.is_empty() || times.len() != omegas.len() {
        return Err(Error::InvalidInput("ramp needs matching, non-empty time and frequency lists"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("ramp times must be strictly increasing"));
    }
    for &w in omegas {
        check_omega(w)?;
    }
    if !(heating_quanta >= 0.0) || !heating_quanta.is_finite() {
        return Err(Error::InvalidInput("heating must be non-negative"));
    }
    let nbar0 = match start {
        RampStart::Temperature(t) => nbar_from_temperature(omegas[0], t)?,
        RampStart::Nbar(n) => {
            temperature_from_nbar(omegas[0], n)?;
            n
        }
    };
    let n = times.len();
    let (t0, span) = (times[0], times[n - 1] - times[0]);
    let mut points = Vec::with_capacity(n);
    let mut non_adiabatic = false;
    for i in 0..n {
        let nbar = if span > 0.0 { nbar0 + heating_quanta * (times[i] - t0) / span } else { nbar0 };
        let adiabaticity = if n < 2 {
            0.0
        } else {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            let dw = (omegas[b] - omegas[a]) / (times[b] - times[a]);
            (dw / (omegas[i] * omegas[i])).abs()
        };
        non_adiabatic |= adiabaticity > ADIABATICITY_LIMIT;
        points.push(RampPoint {
            t: times[i],
            omega: omegas[i],
            nbar,
            temperature: temperature_from_nbar(omegas[i], nbar)?,
            adiabaticity,
        });
    }
    Ok(RampProfile { points, non_adiabatic })
}

/// `ω(t) = ω₀ (ω₁/ω₀)^{t/D}` sampled at `steps` points over `[0, D]`.
pub fn exponential_schedule(omega_start: f64, omega_end: f64, duration: f64, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_omega(omega_start)?;
    check_omega(omega_end)?;
    if !(duration > 0.0) || steps < 2 {
        return Err(Error::InvalidInput("schedule needs a positive duration and at least two steps"));
    }
    let ratio = math::ln(omega_end / omega_start);
    let times: Vec<f64> = (0..steps).map(|k| duration * k as f64 / (steps - 1) as f64).collect();
    let omegas = times.iter().map(|t| omega_start * math::exp(ratio * t / duration)).collect();
    Ok((times, omegas))
}

/// Ramp down from `omega_high` to `omega_low`, then back up, each over
/// `duration` with an exponential schedule. Heating is given separately for
/// the two legs; the up-ramp starts from the down-ramp's final occupation.
pub fn round_trip(
    omega_high: f64,
    omega_low: f64,
    duration: f64,
    steps: usize,
    start: RampStart,
    heating_down: f64,
    heating_up: f64,
) -> Result<(RampProfile, RampProfile)> {
    let (t, w) = exponential_schedule(omega_high, omega_low, duration, steps)?;
    let down = adiabatic_ramp(&t, &w, start, heating_down)?;
    let (t2, w2) = exponential_schedule(omega_low, omega_high, duration, steps)?;
    let t2: Vec<f64> = t2.iter().map(|x| x + duration).collect();
    let up = adiabatic_ramp(&t2, &w2, RampStart::Nbar(down.last().nbar), heating_up)?;
    Ok((down, up))
}

/// Mean phonon number from red and blue sideband excitations:
/// `r = red/blue`, `n̄ = r / (1 − r)`.
pub fn nbar_from_sidebands(red: f64, blue: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&red) || !(0.0..=1.0).contains(&blue) {
        return Err(Error::InvalidInput("sideband excitations must lie in [0, 1]"));
    }
    if red >= blue {
        return Err(Error::InvalidInput("red sideband must be weaker than blue"));
    }
    let r = red / blue;
    Ok(r / (1.0 - r))
}
