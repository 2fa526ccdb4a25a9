//! The two truncations that cap a field about the model map without raising `F`.

use horomap_energy::{Energy, Grid, MapField, NodeKind};
use horomap_geometry::{n_translation, reverse_chart, HoroPoint};
use horomap_potentials::MultiPotential;
use serde::Serialize;

use crate::SolverError;

/// Caps applied by [`truncate_u`] and [`truncate_ubar`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationLevels {
    /// Cap on `û = u - u_0`.
    pub t: f64,
    /// Cap on `ū - ū_0` in the reverse chart about `γ_1`.
    pub t_bar: f64,
    /// Offset `w_1` of `γ_1`.
    pub offset: Vec<f64>,
    /// Nodal `ū_0`.
    #[serde(skip)]
    pub ubar0: Vec<f64>,
}

/// `ū_0 = -u_1 + Σ_{i≥2} u_i`, the reverse-chart counterpart of `u_0` about `γ_1`.
pub fn reverse_offset(potentials: &MultiPotential) -> Vec<f64> {
    let mut out = vec![0.0; potentials.u0.len()];
    for (k, col) in potentials.nodal.iter().enumerate() {
        let sign = if k == 0 { -1.0 } else { 1.0 };
        for (o, x) in out.iter_mut().zip(col) {
            *o += sign * x;
        }
    }
    out
}

/// `û ↦ min{û, T}` at the free nodes. `T` must be at least `sup_{∂Ω} û`.
pub fn truncate_u(grid: &Grid, field: &MapField, t: f64) -> MapField {
    let mut out = field.clone();
    for &i in grid.free_nodes() {
        let i = i as usize;
        out.uhat[i] = out.uhat[i].min(t);
    }
    out
}

/// `ū ↦ ū_0 + min{ū - ū_0, T̄}` at the free nodes, where `(ū, v̄)` are the
/// reverse-chart coordinates about `γ_1`; `v̄` is kept.
///
/// Boundary nodes are never moved, so `T̄` must be at least
/// `sup_{∂Ω} (ū - ū_0)`; the level from [`crate::apriori_radius`] leaves a margin of 1.
pub fn truncate_ubar(energy: &Energy, field: &MapField, levels: &TruncationLevels) -> Result<MapField, SolverError> {
    let params = energy.params();
    let grid = energy.grid();
    let u0 = energy.u0();
    if levels.ubar0.len() != grid.len() {
        return Err(SolverError::Configuration("reverse-chart offset does not match the grid".into()));
    }
    let fwd = n_translation(params, &levels.offset)?;
    let back = fwd.inverse();
    let mut out = field.clone();
    for &i in grid.free_nodes() {
        let i = i as usize;
        debug_assert_ne!(grid.kind(i), NodeKind::Excluded);
        let p = HoroPoint::new(u0[i] + field.uhat[i], field.v_at(i).to_vec());
        let mut r = reverse_chart(params, &back.apply(&p));
        let cap = levels.ubar0[i] + levels.t_bar;
        if !(r.u > cap) {
            continue;
        }
        r.u = cap;
        let q = reverse_chart(params, &r);
        let again = reverse_chart(params, &q);
        let err = (again.u - r.u).abs().max(again.v.iter().zip(&r.v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let scale = 1.0 + r.u.abs() + r.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(err <= 1e-10 * scale) {
            return Err(SolverError::Numerical(format!("reverse chart round trip off by {err:e} at node {i}")));
        }
        let p2 = fwd.apply(&q);
        out.uhat[i] = p2.u - u0[i];
        out.v_at_mut(i).copy_from_slice(&p2.v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use horomap_energy::build_grid;
    use horomap_geometry::{Family, ModelParams};
    use horomap_potentials::{multi_potential, Lattice, SingularComponent};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn energy(fam: Family, w: Vec<f64>) -> (Energy, TruncationLevels) {
        let p = ModelParams::new(fam, 2).unwrap();
        let l = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], 0.125).unwrap();
        let c = SingularComponent::point(&[0.0, 0.0], 1.0, w.clone()).unwrap();
        let g = build_grid(&l, &[c.clone()]).unwrap();
        let mp = multi_potential(&[c], &l).unwrap();
        let levels = TruncationLevels { t: 0.5, t_bar: 0.5, offset: w, ubar0: reverse_offset(&mp) };
        (Energy::new(g, p, mp.u0).unwrap(), levels)
    }

    #[test]
    fn u_truncation_is_a_projection() {
        let (en, lv) = energy(Family::R, vec![0.0]);
        let mut f = en.zero_field();
        for (i, x) in f.uhat.iter_mut().enumerate() {
            *x = (i as f64 * 0.37).sin() * 2.0;
        }
        let once = truncate_u(en.grid(), &f, lv.t);
        assert_eq!(truncate_u(en.grid(), &once, lv.t), once);
        let low = truncate_u(en.grid(), &f, 10.0);
        assert_eq!(low, f);
    }

    #[test]
    fn ubar_cap_on_the_geodesic_is_a_reflection_of_the_u_cap() {
        // With v = w, the reverse chart gives ū = -u, so the cap reads u ≥ u_0 - T̄.
        let (en, lv) = energy(Family::R, vec![0.3]);
        let mut f = en.zero_field();
        for i in 0..f.len() {
            f.uhat[i] = -1.5 + 0.01 * i as f64 / f.len() as f64;
            f.v_at_mut(i)[0] = 0.3;
        }
        let out = truncate_ubar(&en, &f, &lv).unwrap();
        for &i in en.grid().free_nodes() {
            let i = i as usize;
            let expect = f.uhat[i].max(-lv.t_bar);
            assert!((out.uhat[i] - expect).abs() < 1e-12, "{} vs {expect}", out.uhat[i]);
            assert!((out.v_at(i)[0] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn ubar_truncation_leaves_admissible_fields_alone() {
        let (en, lv) = energy(Family::H, vec![0.1; 7]);
        let mut f = en.zero_field();
        for i in 0..f.len() {
            f.v_at_mut(i).copy_from_slice(&[0.1; 7]);
        }
        assert_eq!(truncate_ubar(&en, &f, &lv).unwrap(), f);
    }

    #[test]
    fn truncations_do_not_raise_energy_on_random_fields() {
        for fam in Family::ALL {
            let (en, _) = energy(fam, vec![0.0; ModelParams::new(fam, 2).unwrap().vdim()]);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let lv = TruncationLevels { t: 0.3, t_bar: 0.3, offset: vec![0.0; en.params().vdim()], ubar0: {
                let mut u = en.u0().to_vec();
                u.iter_mut().for_each(|x| *x = -*x);
                u
            } };
            for _ in 0..20 {
                let mut f = en.zero_field();
                for x in f.uhat.iter_mut() {
                    *x = rng.random_range(-1.5..1.5);
                }
                for x in f.v.iter_mut() {
                    *x = rng.random_range(-1.5..1.5);
                }
                let f0 = en.value(&f).unwrap();
                let fu = en.value(&truncate_u(en.grid(), &f, lv.t)).unwrap();
                let fb = en.value(&truncate_ubar(&en, &f, &lv).unwrap()).unwrap();
                assert!(fu <= f0, "{fam} u: {fu} > {f0}");
                assert!(fb <= f0, "{fam} ubar: {fb} > {f0}");
            }
        }
    }
}
