//! Numerical model of a three-ion tunnelling rotor held in a linear Paul trap.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO. It covers:
//!
//! - [`crystal`]: equilibrium Coulomb crystals in a harmonic pseudopotential
//! - [`modes`]: normal modes, their classification and confinement sweeps
//! - [`rotor`]: the effective periodic potential of the rigid rotor
//! - [`quantum`]: flux-threaded rotor spectrum, tunnelling rates and
//!   transition probabilities
//! - [`thermo`]: boson thermometry and adiabatic ramps
//! - [`abfield`]: field geometry, flux bookkeeping and Lorentz-force estimates
//! - [`expsim`]: seeded binomial measurement simulation and weighted
//!   nonlinear least-squares fits
//!
//! Everything is SI at the public boundary. The crystal solver works
//! internally in units of the axial Coulomb length
//! `ℓ = (q²/(4πε₀ m ωz²))^(1/3)` and energy `m ωz² ℓ²`.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` guards are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod abfield;
pub mod consts;
pub mod crystal;
mod error;
pub mod exec;
pub mod expsim;
pub mod linalg;
pub(crate) mod math;
pub mod minimize;
pub mod modes;
pub mod quantum;
pub mod rotor;
pub mod thermo;

pub use crate::crystal::{IonCrystal, TrapConfig};
pub use crate::error::{Error, Result};
pub use crate::exec::{Executor, Sequential};
pub use crate::modes::{ModeLabel, ModeSpectrum};
pub use crate::rotor::RotorPotential;
pub use crate::quantum::{DynamicsModel, TunnellingSolution};



