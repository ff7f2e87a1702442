//! CODATA 2018 constants (exact SI values where defined).

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * core::f64::consts::PI);
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Coulomb constant 1/(4πε₀), N·m²/C².
pub const COULOMB: f64 = 1.0 / (4.0 * core::f64::consts::PI * EPSILON_0);
/// Atomic mass unit used for ion masses, kg.
pub const AMU: f64 = 1.660_54e-27;
/// Magnetic flux quantum h/e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / ELEMENTARY_CHARGE;
/// One gauss in tesla.
pub const GAUSS: f64 = 1e-4;

/// Angular frequency (rad/s) for a frequency in Hz.
#[inline]
pub fn angular(hz: f64) -> f64 {
    2.0 * core::f64::consts::PI * hz
}

/// Frequency in Hz for an angular frequency in rad/s.
#[inline]
pub fn hertz(omega: f64) -> f64 {
    omega / (2.0 * core::f64::consts::PI)
}
