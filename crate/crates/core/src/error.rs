use core::fmt;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input failed a precondition.
    InvalidInput(&'static str),
    /// Two ions occupy the same position.
    SingularConfiguration { ion_a: usize, ion_b: usize },
    /// A minimizer stopped before reaching its gradient tolerance.
    NotConverged { iterations: usize, gradient_norm: f64 },
    /// The constrained rotor minimization failed at this orientation.
    ConstrainedFailure { theta: f64, residual: f64 },
    /// The trap does not hold a planar three-ion crystal.
    NotPlanar,
    /// Plane-wave expansion has too much weight in its outermost coefficients.
    BasisNotConverged { basis_size: usize, edge_weight: f64 },
    /// Normal equations could not be solved even at the damping bound.
    DampingExceeded { lambda: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::SingularConfiguration { ion_a, ion_b } => {
                write!(f, "ions {ion_a} and {ion_b} coincide")
            }
            Error::NotConverged { iterations, gradient_norm } => write!(
                f,
                "minimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e})"
            ),
            Error::ConstrainedFailure { theta, residual } => write!(
                f,
                "constrained minimization failed at theta = {theta:.6} rad (residual {residual:.3e})"
            ),
            Error::NotPlanar => f.write_str("trap does not hold a planar triangular crystal"),
            Error::BasisNotConverged { basis_size, edge_weight } => write!(
                f,
                "plane-wave basis of size {basis_size} not converged (edge weight {edge_weight:.3e}); use a larger basis"
            ),
            Error::DampingExceeded { lambda } => {
                write!(f, "least-squares damping exceeded its bound ({lambda:.3e})")
            }
        }
    }
}

impl core::error::Error for Error {}
