//! Charges, Busemann limits, observed distances and the uniqueness study.

use horomap_energy::{Grid, MapField, NodeKind};
use horomap_geometry::{busemann_plus, n_translation, raw, HoroPoint, ModelParams};
use horomap_potentials::{boundary_distance, SingularComponent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::descent::{minimize_from, SolveStatus};
use crate::problem::{setup, Problem, Setup};
use crate::SolverError;

/// Per-component quantities reported after a solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentDiagnostics {
    /// Outward flux of `u_i` through the shell of radius `shell_radius`.
    pub charge: f64,
    pub shell_radius: f64,
    /// `lim (f_{-γ_1} - f_{γ_1})(γ_i(t))`, evaluated at `t = 20`; absent when `γ_i = γ_1`.
    pub d: Option<f64>,
    /// Change of that quantity between `t = 10` and `t = 20`.
    pub d_tail: Option<f64>,
    /// `max dist(φ, φ_i)` over `Ω_i`.
    pub max_distance: f64,
    pub apriori_radius: f64,
}

/// `(f_{-γ_1} - f_{γ_1})(t, w_i)` where `γ_1` is the vertical geodesic with offset `w_1`.
pub fn busemann_limit(params: &ModelParams, w1: &[f64], wi: &[f64], t: f64) -> Result<f64, SolverError> {
    let back = n_translation(params, w1)?.inverse();
    let p = back.apply(&HoroPoint::new(t, wi.to_vec()));
    Ok(t - busemann_plus(params, &p))
}

fn min_separation(components: &[SingularComponent]) -> f64 {
    let mut sep = f64::INFINITY;
    for (i, a) in components.iter().enumerate() {
        for b in &components[i + 1..] {
            sep = sep.min(a.separation(b));
        }
    }
    sep
}

/// Node masks of the neighbourhoods `Ω_i`: the whole grid for at most one
/// component, otherwise balls or tubes of half the smallest separation.
pub fn component_regions(grid: &Grid, components: &[SingularComponent]) -> Vec<Vec<bool>> {
    if components.len() <= 1 {
        return vec![vec![true; grid.len()]];
    }
    let half = 0.5 * min_separation(components);
    let n = grid.dim();
    components
        .iter()
        .map(|c| (0..grid.len()).map(|i| c.distance(&grid.point(i)[..n]) < half).collect())
        .collect()
}

/// `max dist(φ(x), φ_i(x))` over the non-excluded nodes of each `Ω_i`, with `φ_i = (u_i, w_i)`.
pub fn observed_distances(s: &Setup, field: &MapField) -> Vec<f64> {
    let params = s.energy.params();
    let u0 = s.energy.u0();
    let comps = s.levels_components();
    let regions = component_regions(&s.grid, &comps.0);
    regions
        .iter()
        .enumerate()
        .map(|(i, mask)| {
            let mut worst: f64 = 0.0;
            for k in (0..s.grid.len()).filter(|&k| mask[k] && s.grid.kind(k) != NodeKind::Excluded) {
                let ui = s.potentials.nodal.get(i).map_or(0.0, |u| u[k]);
                let wi = comps.1.get(i).cloned().unwrap_or_else(|| vec![0.0; params.vdim()]);
                let d = raw::dist(params, u0[k] + field.uhat[k], field.v_at(k), ui, &wi);
                worst = worst.max(d);
            }
            worst
        })
        .collect()
}

impl Setup {
    fn levels_components(&self) -> (Vec<SingularComponent>, Vec<Vec<f64>>) {
        let comps: Vec<SingularComponent> = self.potentials.potentials.iter().map(|p| p.component().clone()).collect();
        let offsets = comps.iter().map(|c| c.offset.clone()).collect();
        (comps, offsets)
    }
}

/// Charges `e_i`, Busemann limits `d_i` relative to `γ_1`, and observed distances.
pub fn diagnostics_multi(s: &Setup, field: &MapField) -> Result<Vec<ComponentDiagnostics>, SolverError> {
    let params = s.energy.params();
    let (comps, offsets) = s.levels_components();
    if comps.is_empty() {
        return Ok(vec![]);
    }
    let observed = observed_distances(s, field);
    let half = 0.5 * min_separation(&comps);
    let lattice = s.grid.lattice();
    let mut out = Vec::with_capacity(comps.len());
    for (i, c) in comps.iter().enumerate() {
        let room = boundary_distance(c, lattice);
        let shell = (0.5 * room).min(0.5 * half);
        let charge = s.potentials.potentials[i].charge(shell)?;
        // The limit is finite only when γ_i and γ_1 are distinct geodesics.
        let (d, d_tail) = if i == 0 || offsets[i] == offsets[0] {
            (None, None)
        } else {
            let d20 = busemann_limit(params, &offsets[0], &offsets[i], 20.0)?;
            let d10 = busemann_limit(params, &offsets[0], &offsets[i], 10.0)?;
            (Some(d20), Some((d20 - d10).abs()))
        };
        out.push(ComponentDiagnostics {
            charge,
            shell_radius: shell,
            d,
            d_tail,
            max_distance: observed[i],
            apriori_radius: s.bounds[i].radius,
        });
    }
    Ok(out)
}

/// Result of descending from several perturbed initial fields.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    /// `max_x dist(φ^(k)(x), φ^(1)(x))` over all runs `k`.
    pub spread: f64,
    /// Smallest discrete Laplacian of `dist(φ^(1), φ^(2))²` over interior nodes with a full stencil.
    pub min_laplacian: f64,
    pub sweeps: Vec<usize>,
}

/// Descends from `n_inits` initial fields, each the blended extension with
/// uniform noise of amplitude 0.1 in `v` and, farther than `ρ/2` from `Σ`, in `û`.
pub fn uniqueness_check(problem: &Problem, n_inits: usize, seed: u64) -> Result<UniquenessReport, SolverError> {
    if n_inits < 2 {
        return Err(SolverError::Configuration("uniqueness check needs at least two runs".into()));
    }
    let s = setup(problem)?;
    let g = &s.grid;
    let n = g.dim();
    let mut runs = Vec::with_capacity(n_inits);
    let mut sweeps = Vec::with_capacity(n_inits);
    for k in 0..n_inits {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64));
        let mut init = s.initial.clone();
        for &i in g.free_nodes() {
            let i = i as usize;
            let x = g.point(i);
            let far = problem.components.iter().all(|c| c.distance(&x[..n]) > 0.5 * s.blend_radius);
            let du: f64 = rng.random_range(-0.1..0.1);
            if far {
                init.uhat[i] += du;
            }
            for c in init.v_at_mut(i) {
                *c += rng.random_range(-0.1..0.1);
            }
        }
        let d = minimize_from(&s.energy, &problem.options, Some(&s.levels), init)?;
        if d.status != SolveStatus::Converged {
            return Err(SolverError::Numerical(format!("run {k} stopped after {} sweeps without converging", d.sweeps)));
        }
        sweeps.push(d.sweeps);
        runs.push(d.field);
    }
    let params = s.energy.params();
    let u0 = s.energy.u0();
    let dist_between = |a: &MapField, b: &MapField, i: usize| {
        raw::dist(params, u0[i] + a.uhat[i], a.v_at(i), u0[i] + b.uhat[i], b.v_at(i))
    };
    let mut spread: f64 = 0.0;
    for r in &runs[1..] {
        for i in (0..g.len()).filter(|&i| g.kind(i) != NodeKind::Excluded) {
            spread = spread.max(dist_between(&runs[0], r, i));
        }
    }
    let d2: Vec<f64> = (0..g.len())
        .map(|i| if g.kind(i) == NodeKind::Excluded { 0.0 } else { dist_between(&runs[0], &runs[1], i).powi(2) })
        .collect();
    let h2 = g.h() * g.h();
    let lattice = g.lattice();
    let mut min_laplacian = f64::INFINITY;
    for &i in g.free_nodes() {
        let i = i as usize;
        if g.full_stencil(i) {
            let lap: f64 = lattice.neighbors(i).map(|j| d2[j] - d2[i]).sum::<f64>() / h2;
            min_laplacian = min_laplacian.min(lap);
        }
    }
    Ok(UniquenessReport { spread, min_laplacian, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use horomap_geometry::Family;

    #[test]
    fn real_busemann_limit_is_minus_log_of_squared_offset() {
        let p = ModelParams::new(Family::R, 2).unwrap();
        for w in [0.3, 1.0, 2.5] {
            let d20 = busemann_limit(&p, &[0.0], &[w], 20.0).unwrap();
            let d10 = busemann_limit(&p, &[0.0], &[w], 10.0).unwrap();
            assert!((d20 + (w * w).ln()).abs() < 1e-12);
            assert!((d20 - d10).abs() < 1e-6);
        }
        // Shifting both offsets leaves the limit unchanged.
        let a = busemann_limit(&p, &[0.4], &[1.4], 20.0).unwrap();
        assert!(a.abs() < 1e-12);
    }

    #[test]
    fn complex_limit_uses_the_horizontal_and_vertical_parts() {
        let p = ModelParams::new(Family::C, 2).unwrap();
        // e^{2ū} → e^{2t} (|w_h|⁴ + 4|w_v|²) along (t, w).
        let w = [0.5, 0.6, -0.2];
        let h2: f64 = 0.6 * 0.6 + 0.2 * 0.2;
        let expect = -0.5 * (h2 * h2 + 4.0 * 0.25).ln();
        assert!((busemann_limit(&p, &[0.0; 3], &w, 20.0).unwrap() - expect).abs() < 1e-12);
    }
}
