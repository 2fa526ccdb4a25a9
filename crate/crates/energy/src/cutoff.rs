//! Logarithmic cutoffs and weighted inequalities on the grid.

use horomap_geometry::raw::q_form as q_form_unchecked;
use horomap_geometry::ModelParams;
use horomap_potentials::{MultiPotential, SingularComponent};

use crate::functional::Energy;
use crate::grid::{Grid, NodeKind};
use crate::EnergyError;

/// The cutoff `χ_ε(r) = 0` for `r ≤ ε²`, `1` for `r ≥ ε`, `2 - log r / log ε` in between,
/// where `r = dist(x, Σ)`.
pub fn log_cutoff_value(r: f64, eps: f64) -> f64 {
    if r <= eps * eps {
        0.0
    } else if r >= eps {
        1.0
    } else {
        2.0 - r.ln() / eps.ln()
    }
}

/// Nodal values of the logarithmic cutoff around `Σ`.
pub fn log_cutoff(grid: &Grid, components: &[SingularComponent], eps: f64) -> Result<Vec<f64>, EnergyError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(EnergyError::Configuration(format!("cutoff parameter must lie in (0, 1), got {eps}")));
    }
    if eps * eps < 2.0 * grid.h() {
        return Err(EnergyError::Resolution(format!(
            "inner cutoff radius {} is below twice the spacing {}",
            eps * eps,
            grid.h()
        )));
    }
    let n = grid.dim();
    Ok((0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let r = components.iter().map(|c| c.distance(&x[..n])).fold(f64::INFINITY, f64::min);
            log_cutoff_value(r, eps)
        })
        .collect())
}

/// `Σ_edges h^{n-2} (Δf)²` over the edges of `Ω ∖ Σ`.
pub fn dirichlet_energy(grid: &Grid, values: &[f64]) -> f64 {
    let s: f64 = grid.edges().iter().map(|&[i, j]| (values[j as usize] - values[i as usize]).powi(2)).sum();
    grid.edge_weight() * s
}

/// `Σ_edges h^{n-2} Q_{(U, w)}(Δv)` with `U` the edge midpoint of `u_0`: the
/// squared weighted norm of `v` about the map `φ_0 = (u_0, w)`.
pub fn weighted_norm_sqr(energy: &Energy, w: &[f64], v: &[f64]) -> Result<f64, EnergyError> {
    let p = energy.params();
    let vd = p.vdim();
    let g = energy.grid();
    if w.len() != vd || v.len() != g.len() * vd {
        return Err(EnergyError::DimensionMismatch { expected: g.len() * vd, got: v.len() });
    }
    let u0 = energy.u0();
    let mut dv = vec![0.0; vd];
    let mut acc = 0.0;
    for &[i, j] in g.edges() {
        let (i, j) = (i as usize, j as usize);
        for k in 0..vd {
            dv[k] = v[j * vd + k] - v[i * vd + k];
        }
        acc += q_form_unchecked(p, 0.5 * (u0[i] + u0[j]), w, &dv);
    }
    Ok(g.edge_weight() * acc)
}

/// Both sides of the weighted Poincaré inequality for a compactly supported `v`:
/// `lhs = Σ_nodes h^n Q_{φ_0}(v) ‖∇u_0‖²` and `rhs = a^{-2} Σ_edges h^{n-2} Q_{φ̄_0}(Δv)`.
pub fn poincare_check(
    energy: &Energy,
    potentials: &MultiPotential,
    w: &[f64],
    v: &[f64],
) -> Result<(f64, f64), EnergyError> {
    let p: &ModelParams = energy.params();
    let vd = p.vdim();
    let g = energy.grid();
    if w.len() != vd || v.len() != g.len() * vd {
        return Err(EnergyError::DimensionMismatch { expected: g.len() * vd, got: v.len() });
    }
    for i in 0..g.len() {
        if !g.full_stencil(i) && v[i * vd..(i + 1) * vd].iter().any(|x| *x != 0.0) {
            return Err(EnergyError::Contract(format!(
                "trial field must vanish on the boundary and next to the singular set (node {i})"
            )));
        }
    }
    let n = g.dim();
    let u0 = energy.u0();
    let mut lhs = 0.0;
    for i in 0..g.len() {
        let vi = &v[i * vd..(i + 1) * vd];
        if g.kind(i) == NodeKind::Excluded || vi.iter().all(|x| *x == 0.0) {
            continue;
        }
        let x = g.point(i);
        let mut grad = [0.0; 3];
        for pot in &potentials.potentials {
            let gi = pot.gradient(&x[..n])?;
            for k in 0..3 {
                grad[k] += gi[k];
            }
        }
        let g2: f64 = grad.iter().map(|c| c * c).sum();
        lhs += q_form_unchecked(p, u0[i], w, vi) * g2;
    }
    lhs *= g.cell_volume();
    let a = p.a();
    let rhs = weighted_norm_sqr(energy, w, v)? / (a * a);
    Ok((lhs, rhs))
}
