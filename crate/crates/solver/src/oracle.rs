//! Independent check for totally geodesic data.
//!
//! When the boundary `v` and every offset `w_i` equal one constant `w`, the
//! minimizer keeps `v ≡ w` and `û` is the discrete-harmonic function on the
//! edge graph of `Ω ∖ Σ` with the boundary values of `ψ_u - u_0`. That linear
//! problem is solved here by successive over-relaxation, sharing no code with
//! the descent.

use horomap_energy::MapField;
use serde::Serialize;

use crate::problem::Setup;
use crate::SolverError;

/// Agreement threshold for both `û` and `v`.
const MATCH_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleMatch {
    pub max_u_error: f64,
    pub max_v_deviation: f64,
    pub matches: bool,
}

fn constant_target(s: &Setup) -> Option<Vec<f64>> {
    let vd = s.energy.params().vdim();
    let l = s.grid.lattice();
    let first = (0..s.grid.len()).find(|&i| l.is_boundary(i))?;
    let w = s.boundary.at(first, vd).1.to_vec();
    let boundary_ok = (0..s.grid.len()).filter(|&i| l.is_boundary(i)).all(|i| s.boundary.at(i, vd).1 == w.as_slice());
    let offsets_ok = s.potentials.potentials.iter().all(|p| p.component().offset == w);
    (boundary_ok && offsets_ok).then_some(w)
}

/// The discrete-harmonic `û` when the data are totally geodesic, `None` otherwise.
pub fn laplace_oracle(s: &Setup) -> Result<Option<Vec<f64>>, SolverError> {
    if constant_target(s).is_none() {
        return Ok(None);
    }
    let g = &s.grid;
    let edges = g.edges();
    let mut u: Vec<f64> = s.initial.uhat.clone();
    let free: Vec<usize> = g.free_nodes().iter().map(|&i| i as usize).collect();
    for &i in &free {
        u[i] = 0.0;
    }
    let cells = g.lattice().shape().iter().copied().max().unwrap_or(2) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / cells).sin());
    let scale = u.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let neighbour = |e: u32, i: usize| {
        let [a, b] = edges[e as usize];
        if a as usize == i { b as usize } else { a as usize }
    };
    for sweep in 0..1_000_000 {
        let mut change: f64 = 0.0;
        for &i in &free {
            let inc = g.incident_edges(i);
            if inc.is_empty() {
                continue;
            }
            let mean = inc.iter().map(|&e| u[neighbour(e, i)]).sum::<f64>() / inc.len() as f64;
            let next = u[i] + omega * (mean - u[i]);
            change = change.max((next - u[i]).abs());
            u[i] = next;
        }
        if sweep % 20 == 0 || change < 1e-15 * scale {
            let res = free
                .iter()
                .map(|&i| g.incident_edges(i).iter().map(|&e| u[neighbour(e, i)] - u[i]).sum::<f64>().abs())
                .fold(0.0, f64::max);
            if res <= 1e-14 * scale {
                return Ok(Some(u));
            }
        }
    }
    Err(SolverError::Numerical("over-relaxation oracle did not converge".into()))
}

/// Compares `field` with the oracle; `None` when the data are not totally geodesic.
pub fn oracle_match(s: &Setup, field: &MapField) -> Result<Option<OracleMatch>, SolverError> {
    let Some(w) = constant_target(s) else { return Ok(None) };
    let Some(u) = laplace_oracle(s)? else { return Ok(None) };
    let g = &s.grid;
    let mut max_u_error: f64 = 0.0;
    let mut max_v_deviation: f64 = 0.0;
    for i in (0..g.len()).filter(|&i| g.kind(i) != horomap_energy::NodeKind::Excluded) {
        max_u_error = max_u_error.max((field.uhat[i] - u[i]).abs());
        for (a, b) in field.v_at(i).iter().zip(&w) {
            max_v_deviation = max_v_deviation.max((a - b).abs());
        }
    }
    Ok(Some(OracleMatch {
        max_u_error,
        max_v_deviation,
        matches: max_u_error <= MATCH_TOL && max_v_deviation <= MATCH_TOL,
    }))
}
