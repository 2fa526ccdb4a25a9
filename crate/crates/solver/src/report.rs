//! The solve report written next to the converged field.

use serde::Serialize;

use crate::apriori::AprioriBound;
use crate::descent::SolveStatus;
use crate::diagnostics::ComponentDiagnostics;
use crate::SolverError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub sweeps: usize,
    pub final_energy: f64,
    pub final_residual: f64,
    /// `F` after each sweep, initial field first.
    pub energy_history: Vec<f64>,
    /// Accepted truncation passes.
    pub truncations: usize,
    /// Radius bound per component (or about `γ_0` without singularities).
    pub apriori: Vec<AprioriBound>,
    pub observed_max_distance: Vec<f64>,
    /// Discretization allowance `10h` added to each radius.
    pub apriori_slack: f64,
    pub apriori_violated: bool,
    pub blend_radius: f64,
    pub components: Vec<ComponentDiagnostics>,
    /// Agreement with the linear oracle, when the data are totally geodesic.
    pub geodesic_oracle_match: Option<bool>,
    /// Left out of the serialized report so repeated runs compare equal.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String, SolverError> {
        serde_json::to_string_pretty(self).map_err(|e| SolverError::Numerical(format!("cannot serialize report: {e}")))
    }
}
