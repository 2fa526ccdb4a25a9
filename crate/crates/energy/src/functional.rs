//! The discrete renormalized energy
//! `F = Σ_edges h^{n-2} [(Δû)² + Q_{φ̄}(Δv)]`, its gradient and its increments.
//!
//! `φ̄` is the edge-midpoint average of `(u, v)`. Since `B(v, v) = 0`, the
//! vertical part of `Q_{φ̄}(Δv)` reduces to `e^{4U} |Δv_vert + B(v_i, v_j)|²`.

use std::ops::Range;
use std::sync::Arc;

use horomap_geometry::{bilinear, ModelParams, Quaternion};
use rayon::prelude::*;

use crate::field::MapField;
use crate::grid::{Grid, NodeKind};
use crate::EnergyError;

/// Edges per reduction chunk; partial sums are combined in chunk order.
const CHUNK: usize = 2048;

/// The two parts of `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyTerms {
    /// `Σ h^{n-2} (Δû)²`.
    pub u_term: f64,
    /// `Σ h^{n-2} Q_{φ̄}(Δv)`.
    pub v_term: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.u_term + self.v_term
    }
}

/// Discrete energy of maps on a fixed grid with fixed `u_0`.
#[derive(Clone)]
pub struct Energy {
    grid: Grid,
    params: ModelParams,
    u0: Vec<f64>,
    pool: Option<Arc<rayon::ThreadPool>>,
}

struct EdgeState {
    du: f64,
    big_u: f64,
    theta: [f64; 3],
    hor: f64,
}

impl Energy {
    /// `u0` must be finite at every non-excluded node.
    pub fn new(grid: Grid, params: ModelParams, u0: Vec<f64>) -> Result<Self, EnergyError> {
        if u0.len() != grid.len() {
            return Err(EnergyError::DimensionMismatch { expected: grid.len(), got: u0.len() });
        }
        if (0..grid.len()).any(|i| grid.kind(i) != NodeKind::Excluded && !u0[i].is_finite()) {
            return Err(EnergyError::Configuration("u0 must be finite away from the singular set".into()));
        }
        Ok(Energy { grid, params, u0, pool: None })
    }

    /// Runs reductions on `workers` threads. Results do not depend on the worker count.
    pub fn with_workers(mut self, workers: usize) -> Result<Self, EnergyError> {
        self.pool = if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| EnergyError::Configuration(format!("cannot start worker pool: {e}")))?;
            Some(Arc::new(pool))
        } else {
            None
        };
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    /// A field with the layout expected by this energy.
    pub fn zero_field(&self) -> MapField {
        MapField::zeros(self.grid.len(), self.params.vdim())
    }

    fn check(&self, f: &MapField) -> Result<(), EnergyError> {
        if f.len() != self.grid.len() || f.vdim() != self.params.vdim() {
            return Err(EnergyError::DimensionMismatch { expected: self.grid.len() * self.params.m, got: f.len() * f.stride() });
        }
        Ok(())
    }

    fn chunked<T: Send>(&self, items: usize, f: impl Fn(Range<usize>) -> T + Sync + Send) -> Vec<T> {
        let chunks = items.div_ceil(CHUNK);
        let range = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(items);
        match &self.pool {
            Some(pool) => pool.install(|| (0..chunks).into_par_iter().map(|c| f(range(c))).collect()),
            None => (0..chunks).map(|c| f(range(c))).collect(),
        }
    }

    fn state(&self, f: &MapField, i: usize, j: usize) -> EdgeState {
        let s = self.params.vert_dim();
        let (vi, vj) = (f.v_at(i), f.v_at(j));
        let du = f.uhat[j] - f.uhat[i];
        let big_u = 0.5 * ((self.u0[i] + f.uhat[i]) + (self.u0[j] + f.uhat[j]));
        let mut theta = [0.0; 3];
        if s > 0 {
            let b = bilinear(&self.params, vi, vj);
            for c in 0..s {
                theta[c] = (vj[c] - vi[c]) + b[c];
            }
        }
        let hor = vi[s..].iter().zip(&vj[s..]).map(|(a, b)| (b - a) * (b - a)).sum();
        EdgeState { du, big_u, theta, hor }
    }

    fn edge_terms(&self, f: &MapField, e: usize) -> (f64, f64) {
        let [i, j] = self.grid.edges()[e];
        let st = self.state(f, i as usize, j as usize);
        let th2: f64 = st.theta.iter().map(|x| x * x).sum();
        let q = if self.params.vert_dim() > 0 { (4.0 * st.big_u).exp() * th2 } else { 0.0 } + (2.0 * st.big_u).exp() * st.hor;
        (st.du * st.du, q)
    }

    /// `F` split into its two parts.
    pub fn terms(&self, f: &MapField) -> Result<EnergyTerms, EnergyError> {
        self.check(f)?;
        let parts = self.chunked(self.grid.edges().len(), |r| {
            let (mut a, mut b) = (0.0, 0.0);
            for e in r {
                let (x, y) = self.edge_terms(f, e);
                a += x;
                b += y;
            }
            (a, b)
        });
        let w = self.grid.edge_weight();
        let (mut a, mut b) = (0.0, 0.0);
        for (x, y) in parts {
            a += x;
            b += y;
        }
        Ok(EnergyTerms { u_term: w * a, v_term: w * b })
    }

    /// The discrete energy `F`.
    pub fn value(&self, f: &MapField) -> Result<f64, EnergyError> {
        Ok(self.terms(f)?.total())
    }

    /// Gradient of `F` with respect to the nodal unknowns; zero at boundary and excluded nodes.
    pub fn gradient(&self, f: &MapField) -> Result<MapField, EnergyError> {
        self.check(f)?;
        let stride = f.stride();
        let ne = self.grid.edges().len();
        // Per-edge contributions, two blocks of `stride` values per edge.
        let blocks = self.chunked(ne, |r| {
            let mut buf = vec![0.0; r.len() * 2 * stride];
            for (k, e) in r.enumerate() {
                let (a, b) = buf[k * 2 * stride..(k + 1) * 2 * stride].split_at_mut(stride);
                self.edge_gradient(f, e, a, b);
            }
            buf
        });
        let contrib: Vec<f64> = blocks.concat();
        let n = self.grid.len();
        let per_node = self.chunked(n, |r| {
            let mut out = vec![0.0; r.len() * stride];
            for (k, i) in r.enumerate() {
                if self.grid.kind(i) != NodeKind::Interior {
                    continue;
                }
                let slot = &mut out[k * stride..(k + 1) * stride];
                for &e in self.grid.incident_edges(i) {
                    let e = e as usize;
                    let side = if self.grid.edges()[e][0] as usize == i { 0 } else { 1 };
                    let src = &contrib[(2 * e + side) * stride..(2 * e + side + 1) * stride];
                    for (a, b) in slot.iter_mut().zip(src) {
                        *a += b;
                    }
                }
            }
            out
        });
        let flat: Vec<f64> = per_node.concat();
        let mut g = self.zero_field();
        for i in 0..n {
            g.uhat[i] = flat[i * stride];
            g.v_at_mut(i).copy_from_slice(&flat[i * stride + 1..(i + 1) * stride]);
        }
        Ok(g)
    }

    fn edge_gradient(&self, f: &MapField, e: usize, gi: &mut [f64], gj: &mut [f64]) {
        let p = &self.params;
        let (s, d) = (p.vert_dim(), p.block_dim());
        let [i, j] = self.grid.edges()[e];
        let (i, j) = (i as usize, j as usize);
        let st = self.state(f, i, j);
        let w = self.grid.edge_weight();
        let e2 = (2.0 * st.big_u).exp();
        let e4 = if s > 0 { (4.0 * st.big_u).exp() } else { 0.0 };
        let th2: f64 = st.theta.iter().map(|x| x * x).sum();
        // d/dU of the Q term, shared equally by both endpoints through U = midpoint.
        let half = 0.5 * (4.0 * e4 * th2 + 2.0 * e2 * st.hor);
        gi[0] = w * (-2.0 * st.du + half);
        gj[0] = w * (2.0 * st.du + half);
        for c in 0..s {
            gi[1 + c] = -2.0 * w * e4 * st.theta[c];
            gj[1 + c] = 2.0 * w * e4 * st.theta[c];
        }
        let (vi, vj) = (f.v_at(i), f.v_at(j));
        let big = Quaternion::pure(&st.theta[..s]);
        for k in 0..p.blocks() {
            let off = s + k * d;
            let bi = Quaternion::from_slice(&vi[off..off + d]);
            let bj = Quaternion::from_slice(&vj[off..off + d]);
            let ti = if s > 0 { (bj * big).components() } else { [0.0; 4] };
            let tj = if s > 0 { (bi * big).components() } else { [0.0; 4] };
            for c in 0..d {
                let dh = vj[off + c] - vi[off + c];
                gi[1 + off + c] = w * (-2.0 * e4 * ti[c] - 2.0 * e2 * dh);
                gj[1 + off + c] = w * (2.0 * e4 * tj[c] + 2.0 * e2 * dh);
            }
        }
    }

    /// `F(f + α s) - F(f)`, summed edgewise in a form free of cancellation
    /// between the two energies.
    pub fn delta(&self, f: &MapField, step: &MapField, alpha: f64) -> Result<f64, EnergyError> {
        self.check(f)?;
        self.check(step)?;
        let p = &self.params;
        let s = p.vert_dim();
        let parts = self.chunked(self.grid.edges().len(), |r| {
            let mut acc = 0.0;
            let mut vi2 = vec![0.0; p.vdim()];
            let mut vj2 = vec![0.0; p.vdim()];
            for e in r {
                let [i, j] = self.grid.edges()[e];
                let (i, j) = (i as usize, j as usize);
                let st = self.state(f, i, j);
                let (vi, vj) = (f.v_at(i), f.v_at(j));
                let (si, sj) = (step.v_at(i), step.v_at(j));
                let ddu = alpha * (step.uhat[j] - step.uhat[i]);
                let d_u = 0.5 * alpha * (step.uhat[i] + step.uhat[j]);
                let mut term = ddu * (2.0 * st.du + ddu);
                if s > 0 {
                    for k in 0..p.vdim() {
                        vi2[k] = alpha * si[k];
                        vj2[k] = alpha * sj[k];
                    }
                    let b1 = bilinear(p, &vi2, vj);
                    let b2 = bilinear(p, vi, &vj2);
                    let b3 = bilinear(p, &vi2, &vj2);
                    let mut cross = 0.0;
                    for c in 0..s {
                        let dth = (vj2[c] - vi2[c]) + b1[c] + b2[c] + b3[c];
                        cross += dth * (2.0 * st.theta[c] + dth);
                    }
                    let th2: f64 = st.theta.iter().map(|x| x * x).sum();
                    term += (4.0 * (st.big_u + d_u)).exp() * cross + (4.0 * st.big_u).exp() * (4.0 * d_u).exp_m1() * th2;
                }
                let mut hcross = 0.0;
                for k in s..p.vdim() {
                    let dh = vj[k] - vi[k];
                    let ddh = alpha * (sj[k] - si[k]);
                    hcross += ddh * (2.0 * dh + ddh);
                }
                term += (2.0 * (st.big_u + d_u)).exp() * hcross + (2.0 * st.big_u).exp() * (2.0 * d_u).exp_m1() * st.hor;
                acc += term;
            }
            acc
        });
        Ok(self.grid.edge_weight() * parts.into_iter().sum::<f64>())
    }

    /// Largest absolute gradient entry over interior nodes, divided by `h^n`.
    pub fn residual_of(&self, grad: &MapField) -> f64 {
        let mut m: f64 = 0.0;
        for &i in self.grid.free_nodes() {
            let i = i as usize;
            m = m.max(grad.uhat[i].abs());
            for c in grad.v_at(i) {
                m = m.max(c.abs());
            }
        }
        m / self.grid.cell_volume()
    }

    /// The Euler–Lagrange residual in density units.
    pub fn residual(&self, f: &MapField) -> Result<f64, EnergyError> {
        Ok(self.residual_of(&self.gradient(f)?))
    }

    /// Edge sums `(E, F)` over edges with both endpoints in `mask`, where
    /// `E` uses `(Δu)²` with `u = u_0 + û` in place of `(Δû)²`.
    pub fn subregion_energies(&self, f: &MapField, mask: &[bool]) -> Result<(f64, f64), EnergyError> {
        self.check(f)?;
        let (mut e_sum, mut f_sum) = (0.0, 0.0);
        for (k, &[i, j]) in self.grid.edges().iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            if !(mask[i] && mask[j]) {
                continue;
            }
            let (a, q) = self.edge_terms(f, k);
            let du = (self.u0[j] + f.uhat[j]) - (self.u0[i] + f.uhat[i]);
            e_sum += du * du + q;
            f_sum += a + q;
        }
        let w = self.grid.edge_weight();
        Ok((w * e_sum, w * f_sum))
    }
}

/// `F` of `field`.
pub fn discrete_f(energy: &Energy, field: &MapField) -> Result<f64, EnergyError> {
    energy.value(field)
}

/// Gradient of `F` at `field`.
pub fn grad_f(energy: &Energy, field: &MapField) -> Result<MapField, EnergyError> {
    energy.gradient(field)
}

/// Euler–Lagrange residual of `field`.
pub fn el_residual(energy: &Energy, field: &MapField) -> Result<f64, EnergyError> {
    energy.residual(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use horomap_geometry::{q_form, Family, HoroPoint};
    use horomap_potentials::{multi_potential, Lattice, SingularComponent};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(fam: Family, h: f64) -> Energy {
        let params = ModelParams::new(fam, 2).unwrap();
        let l = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], h).unwrap();
        let c = SingularComponent::point(&[0.0, 0.0], 1.0, vec![0.0; params.vdim()]).unwrap();
        let grid = build_grid(&l, &[c.clone()]).unwrap();
        let mp = multi_potential(&[c], &l).unwrap();
        Energy::new(grid, params, mp.u0).unwrap()
    }

    fn random_field(en: &Energy, rng: &mut ChaCha8Rng, amp: f64) -> MapField {
        let mut f = en.zero_field();
        for i in 0..f.len() {
            f.uhat[i] = rng.random_range(-amp..amp);
            for c in f.v_at_mut(i) {
                *c = rng.random_range(-amp..amp);
            }
        }
        f
    }

    #[test]
    fn flat_field_has_zero_energy_and_gradient() {
        for fam in Family::ALL {
            let en = setup(fam, 0.125);
            let w: Vec<f64> = (0..en.params().vdim()).map(|k| 0.3 - 0.2 * k as f64).collect();
            let f = MapField::constant(en.grid().len(), 0.0, &w);
            assert_eq!(en.value(&f).unwrap(), 0.0);
            let g = en.gradient(&f).unwrap();
            assert!(g.uhat.iter().chain(&g.v).all(|x| *x == 0.0));
        }
    }

    #[test]
    fn doubling_uhat_scales_first_term_by_four() {
        let en = setup(Family::C, 0.125);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_field(&en, &mut rng, 0.5);
        let mut f2 = f.clone();
        for x in &mut f2.uhat {
            *x *= 2.0;
        }
        assert_eq!(en.terms(&f2).unwrap().u_term, 4.0 * en.terms(&f).unwrap().u_term);
    }

    #[test]
    fn matches_independent_evaluation_with_q_form() {
        for fam in Family::ALL {
            let en = setup(fam, 0.25);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let f = random_field(&en, &mut rng, 0.7);
            let mut want = 0.0;
            for &[i, j] in en.grid().edges() {
                let (i, j) = (i as usize, j as usize);
                let mid_u = 0.5 * (en.u0()[i] + f.uhat[i] + en.u0()[j] + f.uhat[j]);
                let mid_v: Vec<f64> = f.v_at(i).iter().zip(f.v_at(j)).map(|(a, b)| 0.5 * (a + b)).collect();
                let dv: Vec<f64> = f.v_at(j).iter().zip(f.v_at(i)).map(|(a, b)| a - b).collect();
                let q = q_form(en.params(), &HoroPoint::new(mid_u, mid_v), &dv).unwrap();
                want += (f.uhat[j] - f.uhat[i]).powi(2) + q;
            }
            let got = en.value(&f).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{fam}: {got} vs {want}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for fam in Family::ALL {
            let en = setup(fam, 0.25);
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..3 {
                let f = random_field(&en, &mut rng, 0.6);
                let g = en.gradient(&f).unwrap();
                let h = 1e-5;
                for &i in en.grid().free_nodes().iter().step_by(5) {
                    let i = i as usize;
                    for c in 0..f.stride() {
                        let mut a = f.clone();
                        let mut b = f.clone();
                        if c == 0 {
                            a.uhat[i] += h;
                            b.uhat[i] -= h;
                        } else {
                            a.v_at_mut(i)[c - 1] += h;
                            b.v_at_mut(i)[c - 1] -= h;
                        }
                        let fd = (en.value(&a).unwrap() - en.value(&b).unwrap()) / (2.0 * h);
                        let an = if c == 0 { g.uhat[i] } else { g.v_at(i)[c - 1] };
                        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fam} node {i} comp {c}: {fd} vs {an}");
                    }
                }
            }
        }
    }

    #[test]
    fn delta_matches_direct_difference() {
        for fam in Family::ALL {
            let en = setup(fam, 0.125);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let f = random_field(&en, &mut rng, 0.5);
            let s = random_field(&en, &mut rng, 1.0);
            for alpha in [1.0, 0.1, 1e-3] {
                let mut g = f.clone();
                for (a, b) in g.uhat.iter_mut().zip(&s.uhat) {
                    *a += alpha * b;
                }
                for (a, b) in g.v.iter_mut().zip(&s.v) {
                    *a += alpha * b;
                }
                let direct = en.value(&g).unwrap() - en.value(&f).unwrap();
                let d = en.delta(&f, &s, alpha).unwrap();
                assert!((d - direct).abs() <= 1e-10 * en.value(&f).unwrap(), "{fam} {alpha}: {d} vs {direct}");
            }
        }
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let en = setup(Family::H, 1.0 / 32.0);
        let en4 = en.clone().with_workers(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = random_field(&en, &mut rng, 0.3);
        assert_eq!(en.value(&f).unwrap().to_bits(), en4.value(&f).unwrap().to_bits());
        assert_eq!(en.gradient(&f).unwrap(), en4.gradient(&f).unwrap());
    }

    #[test]
    fn real_laplace_residual_vanishes_for_discrete_harmonic_uhat() {
        let params = ModelParams::new(Family::R, 2).unwrap();
        let l = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], 0.0625).unwrap();
        let grid = build_grid(&l, &[]).unwrap();
        let mut vals: Vec<f64> = (0..l.len())
            .map(|i| if l.is_boundary(i) { let p = l.point(i); (2.0 * p[0]).cos() * p[1].exp() } else { 0.0 })
            .collect();
        horomap_potentials::harmonic_extension(&l, &mut vals).unwrap();
        let en = Energy::new(grid, params, vec![0.0; l.len()]).unwrap();
        let f = MapField::from_parts(vals, vec![0.0; l.len()], 1).unwrap();
        assert!(en.residual(&f).unwrap() <= 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_field(&en, &mut rng, 0.1);
        assert!(en.residual(&r).unwrap() > 0.0);
    }
}
