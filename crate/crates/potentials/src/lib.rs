//! Singular harmonic potentials on box domains.
//!
//! A component `Σ_i` (a point in two or three dimensions, or a segment in
//! three) with constant density `δ_i` carries the potential `u_i = μ_i * Γ + u'_i`,
//! where `u'_i` is the discrete-harmonic function that makes `u_i` vanish on
//! the boundary of the box.

mod kernel;
mod laplace;
mod lattice;
mod potential;
mod quadrature;

use thiserror::Error;

pub use kernel::{fundamental_solution, potential_closed_form, ComponentGeometry, SingularComponent};
pub use laplace::{discrete_laplacian, harmonic_extension, solve_dirichlet, CgReport, CG_FAILURE, CG_TOLERANCE};
pub use lattice::Lattice;
pub use potential::{
    boundary_correction, boundary_distance, charge, multi_potential, shell_integral, MultiPotential, SingularPotential,
};
pub use quadrature::{gauss_legendre, shell_samples, ShellSample};

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("shell of radius {radius} does not fit inside the domain (room {room})")]
    ShellOutsideDomain { radius: f64, room: f64 },
    #[error("linear solve stalled after {iterations} iterations at relative residual {relative_residual:e}")]
    SolverFailure { iterations: usize, relative_residual: f64 },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
