//! A priori radii from horoball containment.

use std::f64::consts::LN_2;

use horomap_energy::{BoundaryData, Grid, NodeKind};
use horomap_geometry::{busemann_plus, n_translation, HoroPoint, ModelParams};
use horomap_potentials::{MultiPotential, SingularComponent};
use serde::Serialize;

use crate::diagnostics::component_regions;
use crate::SolverError;

/// The truncation levels `T`, `T̄` and the radius `R` about one `φ_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AprioriBound {
    /// `max{sup_{∂Ω} u + 1, T̄, ½ log 2}`.
    pub t: f64,
    /// `sup_{∂Ω} ū + 1`, with `ū` the Busemann function of `γ_i`.
    pub t_bar: f64,
    /// `sup_{Ω_i} Σ_{j≠i} u_j`; zero for a single component.
    pub shift: f64,
    /// `T + shift + log 2`.
    pub radius: f64,
}

/// `T`, `T̄` and `R = T + log 2` for boundary values `psi` about the geodesic `t ↦ (t, w)`.
pub fn apriori_radius(params: &ModelParams, psi: &[HoroPoint], w: &[f64]) -> Result<AprioriBound, SolverError> {
    if psi.is_empty() {
        return Err(SolverError::Configuration("no boundary values".into()));
    }
    let back = n_translation(params, w)?.inverse();
    let mut sup_u = f64::NEG_INFINITY;
    let mut sup_ubar = f64::NEG_INFINITY;
    for p in psi {
        p.check(params)?;
        sup_u = sup_u.max(p.u);
        sup_ubar = sup_ubar.max(busemann_plus(params, &back.apply(p)));
    }
    let t_bar = sup_ubar + 1.0;
    let t = (sup_u + 1.0).max(t_bar).max(0.5 * LN_2);
    Ok(AprioriBound { t, t_bar, shift: 0.0, radius: t + LN_2 })
}

/// One bound per component, each taken about its own geodesic `γ_i`.
///
/// For several components the radius about `φ_i` is `T_i + sup_{Ω_i} Σ_{j≠i} u_j + log 2`.
pub fn apriori_bounds(
    params: &ModelParams,
    grid: &Grid,
    boundary: &BoundaryData,
    components: &[SingularComponent],
    potentials: &MultiPotential,
) -> Result<Vec<AprioriBound>, SolverError> {
    let vd = params.vdim();
    let l = grid.lattice();
    let psi: Vec<HoroPoint> = (0..grid.len())
        .filter(|&i| l.is_boundary(i))
        .map(|i| {
            let (u, v) = boundary.at(i, vd);
            HoroPoint::new(u, v.to_vec())
        })
        .collect();
    if components.is_empty() {
        return Ok(vec![apriori_radius(params, &psi, &vec![0.0; vd])?]);
    }
    let regions = component_regions(grid, components);
    let mut out = Vec::with_capacity(components.len());
    for (i, c) in components.iter().enumerate() {
        let mut b = apriori_radius(params, &psi, &c.offset)?;
        let mut shift: f64 = 0.0;
        for k in (0..grid.len()).filter(|&k| regions[i][k] && grid.kind(k) != NodeKind::Excluded) {
            let others: f64 = potentials.nodal.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, u)| u[k]).sum();
            shift = shift.max(others);
        }
        b.shift = shift;
        b.radius = b.t + shift + LN_2;
        out.push(b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use horomap_geometry::Family;

    #[test]
    fn trivial_boundary_gives_one_plus_log_two() {
        let p = ModelParams::new(Family::C, 2).unwrap();
        let b = apriori_radius(&p, &[HoroPoint::origin(&p)], &[0.0; 3]).unwrap();
        assert_eq!((b.t, b.t_bar), (1.0, 1.0));
        assert!((b.radius - (1.0 + LN_2)).abs() < 1e-15);
        assert!((b.radius - 1.693_147_180_559_945).abs() < 1e-12);
    }

    #[test]
    fn large_boundary_height_dominates() {
        let p = ModelParams::new(Family::R, 2).unwrap();
        let psi = [HoroPoint::new(3.0, vec![0.0]), HoroPoint::new(0.0, vec![0.0])];
        let b = apriori_radius(&p, &psi, &[0.0]).unwrap();
        // ū = -u on γ, so T̄ = 0 + 1 and T = 3 + 1.
        assert_eq!(b.t_bar, 1.0);
        assert_eq!(b.t, 4.0);
        assert!((b.radius - (4.0 + LN_2)).abs() < 1e-15);
    }

    #[test]
    fn offset_is_measured_from_the_target_geodesic() {
        let p = ModelParams::new(Family::R, 2).unwrap();
        let psi = [HoroPoint::new(0.0, vec![0.7])];
        let a = apriori_radius(&p, &psi, &[0.7]).unwrap();
        let b = apriori_radius(&p, &psi, &[0.0]).unwrap();
        assert_eq!(a.t_bar, 1.0);
        assert!((b.t_bar - (1.0 + (1.0f64 + 0.49).ln())).abs() < 1e-14);
    }
}
