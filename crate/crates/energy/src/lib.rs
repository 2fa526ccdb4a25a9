//! Grids over `Ω ∖ Σ`, discrete maps and the renormalized energy.

mod cutoff;
mod extension;
mod field;
mod functional;
mod grid;

use thiserror::Error;

pub use cutoff::{dirichlet_energy, log_cutoff, log_cutoff_value, poincare_check, weighted_norm_sqr};
pub use extension::{boundary_extension, default_blend_radius, smoothstep_down, BoundaryData};
pub use field::{read_field_csv, write_field_csv, FieldMetadata, MapField};
pub use functional::{discrete_f, el_residual, grad_f, Energy, EnergyTerms};
pub use grid::{build_grid, Grid, NodeKind};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Potential(#[from] horomap_potentials::PotentialError),
    #[error(transparent)]
    Geometry(#[from] horomap_geometry::GeometryError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
