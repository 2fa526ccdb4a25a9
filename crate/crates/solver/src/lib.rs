//! Minimization of the discrete renormalized energy for harmonic maps with
//! prescribed singularities, plus the truncations, a priori bounds and
//! diagnostics used to certify the result.

mod apriori;
mod descent;
mod diagnostics;
mod oracle;
mod problem;
mod report;
mod truncation;

use thiserror::Error;

pub use apriori::{apriori_bounds, apriori_radius, AprioriBound};
pub use descent::{minimize, minimize_from, Descent, SolveStatus};
pub use diagnostics::{
    busemann_limit, component_regions, diagnostics_multi, observed_distances, uniqueness_check, ComponentDiagnostics,
    UniquenessReport,
};
pub use oracle::{laplace_oracle, oracle_match, OracleMatch};
pub use problem::{setup, Problem, Setup, SolverOptions};
pub use report::SolveReport;
pub use truncation::{reverse_offset, truncate_u, truncate_ubar, TruncationLevels};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("line search failed at sweep {sweep} (residual {residual:e})")]
    LineSearch { sweep: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Energy(#[from] horomap_energy::EnergyError),
    #[error(transparent)]
    Potential(#[from] horomap_potentials::PotentialError),
    #[error(transparent)]
    Geometry(#[from] horomap_geometry::GeometryError),
}
