//! Magnetic flux through the rotor loop and Lorentz-force estimates.

use crate::consts::{ELEMENTARY_CHARGE, FLUX_QUANTUM, GAUSS};
use crate::math;
use crate::{Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// Fields (T) acting on a rotor whose loop has normal `rotor_normal` and
/// area `loop_area` (m²).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldSetup {
    pub fixed_field: [f64; 3],
    /// Coil field at the current setting.
    pub tunable_field: [f64; 3],
    pub rotor_normal: [f64; 3],
    pub loop_area: f64,
    /// Rotation (rad) of the coil frame about the trap z axis relative to
    /// the crystal.
    pub misalignment: f64,
}

/// Unit vector along which the tunable coil field points.
pub fn tunable_direction() -> [f64; 3] {
    [0.5, -0.5, -core::f64::consts::FRAC_1_SQRT_2]
}

impl FieldSetup {
    /// 3.4 G along {1/2, −1/2, 1/√2}, coil off, normal along y, 37 μm².
    pub fn experimental() -> Self {
        let b = 3.4 * GAUSS;
        FieldSetup {
            fixed_field: [0.5 * b, -0.5 * b, core::f64::consts::FRAC_1_SQRT_2 * b],
            tunable_field: [0.0; 3],
            rotor_normal: [0.0, 1.0, 0.0],
            loop_area: 37e-12,
            misalignment: 0.0,
        }
    }

    /// Sets the coil field to `strength` (T, signed) along [`tunable_direction`].
    pub fn with_tunable(mut self, strength: f64) -> Self {
        self.tunable_field = tunable_direction().map(|c| c * strength);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rotor_normal;
        let norm = math::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidInput("rotor normal must be a unit vector"));
        }
        if !(self.loop_area > 0.0) || !self.loop_area.is_finite() {
            return Err(Error::InvalidInput("loop area must be positive"));
        }
        let finite = self.fixed_field.iter().chain(&self.tunable_field).all(|v| v.is_finite());
        if !finite || !self.misalignment.is_finite() {
            return Err(Error::InvalidInput("fields must be finite"));
        }
        Ok(())
    }

    /// Total field in the crystal frame, T.
    pub fn total_field(&self) -> [f64; 3] {
        let b = [0, 1, 2].map(|d| self.fixed_field[d] + self.tunable_field[d]);
        rotate_z(b, self.misalignment)
    }
}

fn rotate_z(v: [f64; 3], angle: f64) -> [f64; 3] {
    if angle == 0.0 {
        return v;
    }
    let (s, c) = (math::sin(angle), math::cos(angle));
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FluxReport {
    /// Field component along the normal, T.
    pub b_perp: f64,
    /// Wb
    pub phi: f64,
    /// Φ/φ₀, signed.
    pub flux_quanta: f64,
}

/// Φ = S B⊥ and Φ/φ₀ with φ₀ = h/e.
pub fn flux(setup: &FieldSetup) -> Result<FluxReport> {
    setup.validate()?;
    let b_perp = dot(setup.total_field(), setup.rotor_normal);
    let phi = setup.loop_area * b_perp;
    Ok(FluxReport { b_perp, phi, flux_quanta: phi / FLUX_QUANTUM })
}

/// Coil field magnitude (T) that changes the flux by one quantum.
pub fn tunable_field_per_quantum(setup: &FieldSetup) -> Result<f64> {
    setup.validate()?;
    let proj = dot(rotate_z(tunable_direction(), setup.misalignment), setup.rotor_normal);
    if proj.abs() < 1e-12 {
        return Err(Error::InvalidInput("coil field has no component along the rotor normal"));
    }
    Ok(FLUX_QUANTUM / (setup.loop_area * proj.abs()))
}

/// Inputs to the Lorentz-force estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LorentzInputs {
    /// Barrier height, J.
    pub barrier: f64,
    /// Ground level, J.
    pub energy: f64,
    /// Total rotor mass, kg.
    pub mass: f64,
    /// T
    pub field: f64,
    /// Tunnelling rate, Hz.
    pub rate: f64,
    /// Rotor radius, m.
    pub r0: f64,
    /// Frequency of the restoring motion that absorbs the force, rad/s.
    pub omega_restoring: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LorentzEstimate {
    /// m/s
    pub v_max: f64,
    /// N
    pub f_max: f64,
    /// m/s
    pub v_mean: f64,
    /// N
    pub f_mean: f64,
    /// F_max / (M ω²), m.
    pub radius_shift: f64,
}

/// Order-of-magnitude Lorentz forces on the tunnelling rotor:
/// `v_max = sqrt(2|U₀ − E|/M)`, `v_mean = J r₀ π/3`, `F = e v B`.
pub fn lorentz_estimates(inp: &LorentzInputs) -> Result<LorentzEstimate> {
    let positive = [inp.barrier, inp.energy, inp.mass, inp.rate, inp.r0, inp.omega_restoring];
    if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("Lorentz estimate inputs must be positive"));
    }
    if !(inp.field >= 0.0) || !inp.field.is_finite() {
        return Err(Error::InvalidInput("field must be non-negative"));
    }
    if inp.barrier == inp.energy {
        return Err(Error::InvalidInput("barrier and level coincide"));
    }
    let v_max = math::sqrt(2.0 * (inp.barrier - inp.energy).abs() / inp.mass);
    let v_mean = inp.rate * inp.r0 * core::f64::consts::PI / 3.0;
    let f_max = ELEMENTARY_CHARGE * v_max * inp.field;
    let f_mean = ELEMENTARY_CHARGE * v_mean * inp.field;
    let radius_shift = f_max / (inp.mass * inp.omega_restoring * inp.omega_restoring);
    Ok(LorentzEstimate { v_max, f_max, v_mean, f_mean, radius_shift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::{angular, AMU, PLANCK};

    #[test]
    fn flux_quantum_value() {
        assert!((FLUX_QUANTUM - 4.135_667_696e-15).abs() < 1e-23);
    }

    #[test]
    fn perpendicular_field_gives_no_flux() {
        let s = FieldSetup { fixed_field: [1e-4, 0.0, 2e-4], ..FieldSetup::experimental() };
        assert_eq!(flux(&s).unwrap().phi, 0.0);
    }

    #[test]
    fn default_setup() {
        let r = flux(&FieldSetup::experimental()).unwrap();
        // B⊥ = −3.4 G / 2
        assert!((r.b_perp + 1.7e-4).abs() < 1e-16);
        assert!((r.flux_quanta.abs() - 1.52).abs() < 0.005, "{}", r.flux_quanta);
    }

    #[test]
    fn one_quantum_per_coil_step() {
        let s = FieldSetup::experimental();
        let step = tunable_field_per_quantum(&s).unwrap();
        let a = flux(&s.with_tunable(0.3e-4)).unwrap().flux_quanta;
        let b = flux(&s.with_tunable(0.3e-4 + step)).unwrap().flux_quanta;
        assert!(((b - a).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_setups() {
        let s = FieldSetup { rotor_normal: [0.0, 2.0, 0.0], ..FieldSetup::experimental() };
        assert!(flux(&s).is_err());
        let s = FieldSetup { loop_area: 0.0, ..FieldSetup::experimental() };
        assert!(flux(&s).is_err());
    }

    #[test]
    fn lorentz_orders_of_magnitude() {
        let inp = LorentzInputs {
            barrier: PLANCK * 270.0,
            energy: PLANCK * 90.0,
            mass: 3.0 * 40.0 * AMU,
            field: 5.0 * GAUSS,
            rate: 7.4,
            r0: 3.42e-6,
            omega_restoring: angular(1.119e6),
        };
        let e = lorentz_estimates(&inp).unwrap();
        let v = math::sqrt(2.0 * PLANCK * 180.0 / inp.mass);
        assert!((e.v_max - v).abs() < 1e-12 * v);
        assert!(e.f_max > 1e-26 && e.f_max < 1e-25, "{}", e.f_max);
        assert!((e.f_mean - 2.1e-27).abs() < 0.1e-27, "{}", e.f_mean);
        assert!(e.radius_shift > 1e-15 && e.radius_shift < 1e-13);
        let zero = lorentz_estimates(&LorentzInputs { field: 0.0, ..inp }).unwrap();
        assert_eq!((zero.f_max, zero.f_mean), (0.0, 0.0));
    }
}
