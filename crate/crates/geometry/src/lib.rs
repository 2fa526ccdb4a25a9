//! Geometry of the rank-one symmetric spaces `H^ℓ_K` for K = R, C, H.
//!
//! Points are handled in two models: the unit ball `D ⊂ K^ℓ` and the global
//! horospherical chart `(u, v)` in which the metric reads `du² + Q_p(dv)`.
//! Curvature is normalized to lie in `[-4, -1]` (`[-1, -1]` for K = R).

mod geodesic;
mod isometry;
mod metric;
mod model;
mod params;
mod quaternion;

pub mod comparison;

use thiserror::Error;

pub use geodesic::{geodesic_ode, geodesic_ode_with, geodesic_vertical, normalize_direction, OdeOptions};
pub use isometry::{
    dilation_tau, mobius_apply, n_translation, reverse_chart, transvection_to_origin, Dilation, Isometry,
    MobiusMatrix, NTranslation,
};
pub use metric::{covector_norm_sqr, metric_tensor, q_solve, vector_norm_sqr};
pub use model::{
    bilinear, busemann_minus, busemann_plus, disk_to_horo, dist, dist_disk, horo_to_disk, q_form, DiskPoint,
    HoroPoint,
};
pub use params::{Family, ModelParams};
pub use quaternion::{KScalar, Quaternion};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rank must be at least 2, got {0}")]
    InvalidRank(usize),
    #[error("unknown family `{0}` (expected R, C or H)")]
    UnknownFamily(String),
    #[error("point is not inside the unit ball (|z|² = {norm_sqr})")]
    OutsideDisk { norm_sqr: f64 },
    #[error("coordinates do not lie in the algebra {0}")]
    NotInFamily(Family),
    #[error("matrix does not preserve the hermitian form (residual {0:e})")]
    FormViolation(f64),
    #[error("non-finite coordinates")]
    NonFinite,
    #[error("direction has zero or infinite length")]
    DegenerateDirection,
    #[error("initial direction must have unit length, got {0}")]
    NotUnitSpeed(f64),
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),
}

/// Fast, unchecked kernels for callers that validate dimensions once up front.
pub mod raw {
    pub use crate::metric::q_solve_unchecked as q_solve;
    pub use crate::model::busemann_plus_unchecked as busemann_plus;
    pub use crate::model::dist_unchecked as dist;
    pub use crate::model::q_form_unchecked as q_form;
}
