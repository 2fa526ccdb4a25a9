//! Boundary data `ψ` and its blended extension `(ũ, ṽ)` into the domain.

use horomap_geometry::HoroPoint;
use horomap_potentials::{boundary_distance, harmonic_extension, Lattice, SingularComponent};

use crate::field::MapField;
use crate::grid::Grid;
use crate::EnergyError;

/// Boundary map `ψ` in chart coordinates `(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryData {
    Constant(HoroPoint),
    /// Nodal values; only boundary entries are read. `v` is node-major.
    Nodal { u: Vec<f64>, v: Vec<f64> },
}

impl BoundaryData {
    /// Samples `f` at the boundary nodes of `grid`.
    pub fn from_fn(grid: &Grid, vdim: usize, f: impl Fn(&[f64]) -> HoroPoint) -> Result<Self, EnergyError> {
        Self::sample(grid.lattice(), vdim, f)
    }

    /// Samples `f` at the boundary nodes of a lattice.
    pub fn sample(l: &Lattice, vdim: usize, f: impl Fn(&[f64]) -> HoroPoint) -> Result<Self, EnergyError> {
        let n = l.dim();
        let mut u = vec![0.0; l.len()];
        let mut v = vec![0.0; l.len() * vdim];
        for i in (0..l.len()).filter(|&i| l.is_boundary(i)) {
            let p = f(&l.point(i)[..n]);
            if p.v.len() != vdim {
                return Err(EnergyError::DimensionMismatch { expected: vdim, got: p.v.len() });
            }
            u[i] = p.u;
            v[i * vdim..(i + 1) * vdim].copy_from_slice(&p.v);
        }
        Ok(BoundaryData::Nodal { u, v })
    }

    /// `ψ` at node `i`.
    pub fn at(&self, i: usize, vdim: usize) -> (f64, &[f64]) {
        match self {
            BoundaryData::Constant(p) => (p.u, &p.v),
            BoundaryData::Nodal { u, v } => (u[i], &v[i * vdim..(i + 1) * vdim]),
        }
    }

    pub fn check(&self, grid: &Grid, vdim: usize) -> Result<(), EnergyError> {
        match self {
            BoundaryData::Constant(p) => {
                if p.v.len() != vdim {
                    return Err(EnergyError::DimensionMismatch { expected: vdim, got: p.v.len() });
                }
                if !p.u.is_finite() || p.v.iter().any(|x| !x.is_finite()) {
                    return Err(EnergyError::Configuration("boundary map must be finite".into()));
                }
            }
            BoundaryData::Nodal { u, v } => {
                if u.len() != grid.len() || v.len() != grid.len() * vdim {
                    return Err(EnergyError::DimensionMismatch { expected: grid.len(), got: u.len() });
                }
                let l = grid.lattice();
                for i in (0..grid.len()).filter(|&i| l.is_boundary(i)) {
                    if !u[i].is_finite() || v[i * vdim..(i + 1) * vdim].iter().any(|x| !x.is_finite()) {
                        return Err(EnergyError::Configuration(format!("boundary map is not finite at node {i}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `1` for `t ≤ 0`, `0` for `t ≥ 1`, and the cubic smoothstep in between.
pub fn smoothstep_down(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    1.0 - t * t * (3.0 - 2.0 * t)
}

/// The default blend radius: half the distance from `Σ` to `∂Ω`, further limited
/// to half the smallest separation between components.
pub fn default_blend_radius(grid: &Grid, components: &[SingularComponent]) -> Option<f64> {
    let wall = components.iter().map(|c| boundary_distance(c, grid.lattice())).fold(f64::INFINITY, f64::min);
    if !wall.is_finite() {
        return None;
    }
    let mut sep = f64::INFINITY;
    for (i, a) in components.iter().enumerate() {
        for b in &components[i + 1..] {
            sep = sep.min(a.separation(b));
        }
    }
    Some((0.5 * wall).min(0.5 * sep))
}

/// Builds `(ũ, ṽ)`: the discrete-harmonic extension of `(ψ_u - u_0, ψ_v)` blended
/// by smoothstep of `dist(x, Σ_i)` into `(0, w_i)`, exactly within `ρ/2` of each
/// `Σ_i` and untouched beyond `ρ`.
pub fn boundary_extension(
    grid: &Grid,
    psi: &BoundaryData,
    components: &[SingularComponent],
    u0: &[f64],
    vdim: usize,
    rho: Option<f64>,
) -> Result<(MapField, f64), EnergyError> {
    psi.check(grid, vdim)?;
    if u0.len() != grid.len() {
        return Err(EnergyError::DimensionMismatch { expected: grid.len(), got: u0.len() });
    }
    for (i, c) in components.iter().enumerate() {
        if c.offset.len() != vdim {
            return Err(EnergyError::Configuration(format!(
                "component {i} has a target offset of length {}, expected {vdim}",
                c.offset.len()
            )));
        }
    }
    let rho = match (rho, default_blend_radius(grid, components)) {
        (Some(r), _) => r,
        (None, Some(r)) => r,
        (None, None) => 0.0,
    };
    if !components.is_empty() {
        let wall = components.iter().map(|c| boundary_distance(c, grid.lattice())).fold(f64::INFINITY, f64::min);
        if !(rho > 0.0) || rho >= wall {
            return Err(EnergyError::Configuration(format!(
                "blend radius {rho} must be positive and below the distance {wall} from the singular set to the boundary"
            )));
        }
        for (i, a) in components.iter().enumerate() {
            for (j, b) in components.iter().enumerate().skip(i + 1) {
                if 2.0 * rho > a.separation(b) {
                    return Err(EnergyError::Configuration(format!(
                        "blend regions of components {i} and {j} overlap (radius {rho})"
                    )));
                }
            }
        }
    }
    let l = grid.lattice();
    let n = grid.dim();
    let mut field = MapField::zeros(grid.len(), vdim);
    let mut col = vec![0.0; grid.len()];
    for c in 0..=vdim {
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = if l.is_boundary(i) {
                let (u, v) = psi.at(i, vdim);
                if c == 0 { u - u0[i] } else { v[c - 1] }
            } else {
                0.0
            };
        }
        harmonic_extension(l, &mut col)?;
        for i in 0..grid.len() {
            if c == 0 {
                field.uhat[i] = col[i];
            } else {
                field.v_at_mut(i)[c - 1] = col[i];
            }
        }
    }
    for i in 0..grid.len() {
        let x = grid.point(i);
        let nearest = components
            .iter()
            .map(|c| (c.distance(&x[..n]), c))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((d, comp)) = nearest {
            let beta = smoothstep_down((d - 0.5 * rho) / (0.5 * rho));
            if beta == 1.0 {
                field.uhat[i] = 0.0;
                field.v_at_mut(i).copy_from_slice(&comp.offset);
            } else if beta > 0.0 {
                field.uhat[i] *= 1.0 - beta;
                for (a, w) in field.v_at_mut(i).iter_mut().zip(&comp.offset) {
                    *a = (1.0 - beta) * *a + beta * w;
                }
            }
        }
    }
    Ok((field, rho))
}
