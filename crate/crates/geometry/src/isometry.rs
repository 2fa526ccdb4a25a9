//! Isometries: Möbius matrices, the horospherical group N, dilations and the endpoint swap.

use crate::model::{bilinear, disk_to_horo, horo_to_disk, w1_of, DiskPoint, HoroPoint};
use crate::params::ModelParams;
use crate::quaternion::Quaternion;
use crate::GeometryError;

/// Relative tolerance for `h* J h = J` at construction.
const FORM_TOL: f64 = 1e-12;

/// An `(ℓ+1) × (ℓ+1)` matrix over K preserving `x̄_0 y_0 - Σ x̄_k y_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MobiusMatrix {
    params: ModelParams,
    n: usize,
    entries: Vec<Quaternion>,
}

impl MobiusMatrix {
    /// Row-major entries; rejects matrices that do not preserve the form.
    pub fn new(params: &ModelParams, entries: Vec<Quaternion>) -> Result<Self, GeometryError> {
        let n = params.rank + 1;
        if entries.len() != n * n {
            return Err(GeometryError::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        let d = params.block_dim();
        if entries.iter().any(|q| q.components()[d..].iter().any(|&x| x != 0.0)) {
            return Err(GeometryError::NotInFamily(params.family));
        }
        let h = MobiusMatrix { params: *params, n, entries };
        let r = h.form_residual();
        if !(r <= FORM_TOL) {
            return Err(GeometryError::FormViolation(r));
        }
        Ok(h)
    }

    pub fn identity(params: &ModelParams) -> Self {
        let n = params.rank + 1;
        let mut entries = vec![Quaternion::ZERO; n * n];
        for i in 0..n {
            entries[i * n + i] = Quaternion::ONE;
        }
        MobiusMatrix { params: *params, n, entries }
    }

    pub fn entry(&self, i: usize, j: usize) -> Quaternion {
        self.entries[i * self.n + j]
    }

    /// `max |h* J h - J|` divided by `max(1, max|h_ij|²)`.
    pub fn form_residual(&self) -> f64 {
        let n = self.n;
        let sign = |k: usize| if k == 0 { 1.0 } else { -1.0 };
        let scale = self.entries.iter().map(Quaternion::norm_sqr).fold(1.0, f64::max);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Quaternion::ZERO;
                for k in 0..n {
                    acc += self.entry(k, i).conj() * self.entry(k, j) * sign(k);
                }
                if i == j {
                    acc -= Quaternion::real(sign(i));
                }
                worst = worst.max(acc.norm());
            }
        }
        worst / scale
    }

    /// Matrix product `self * other`, i.e. apply `other` first.
    pub fn compose(&self, other: &MobiusMatrix) -> MobiusMatrix {
        let n = self.n;
        let mut entries = vec![Quaternion::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Quaternion::ZERO;
                for k in 0..n {
                    acc += self.entry(i, k) * other.entry(k, j);
                }
                entries[i * n + j] = acc;
            }
        }
        MobiusMatrix { params: self.params, n, entries }
    }
}

/// `z ↦ (h_{k0} + Σ_j h_{kj} z_j)(h_{00} + Σ_j h_{0j} z_j)^{-1}`.
pub fn mobius_apply(params: &ModelParams, h: &MobiusMatrix, z: &DiskPoint) -> Result<DiskPoint, GeometryError> {
    if h.params != *params {
        return Err(GeometryError::NotInFamily(params.family));
    }
    let zq = z.quaternions();
    let n = h.n;
    let row = |i: usize| {
        let mut acc = h.entry(i, 0);
        for j in 1..n {
            acc += h.entry(i, j) * zq[j - 1];
        }
        acc
    };
    let inv = row(0).inv().ok_or(GeometryError::NonFinite)?;
    let out = (1..n).map(|i| row(i) * inv).collect();
    DiskPoint::from_quaternions(params, out)
}

/// A transvection moving `z` to the origin.
///
/// Block form `[[c, -s e*], [-s e, I + (c-1) e e*]]` with `e = z/|z|`,
/// `c = 1/sqrt(1-|z|²)`, `s = |z| c`.
pub fn transvection_to_origin(params: &ModelParams, z: &DiskPoint) -> MobiusMatrix {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        return MobiusMatrix::identity(params);
    }
    let r = r2.sqrt();
    let c = 1.0 / (1.0 - r2).sqrt();
    let s = r * c;
    let e: Vec<Quaternion> = z.quaternions().iter().map(|q| *q / r).collect();
    let n = params.rank + 1;
    let mut entries = vec![Quaternion::ZERO; n * n];
    entries[0] = Quaternion::real(c);
    for j in 1..n {
        entries[j] = e[j - 1].conj() * (-s);
        entries[j * n] = e[j - 1] * (-s);
        for k in 1..n {
            let mut x = e[j - 1] * e[k - 1].conj() * (c - 1.0);
            if j == k {
                x += Quaternion::ONE;
            }
            entries[j * n + k] = x;
        }
    }
    MobiusMatrix { params: *params, n, entries }
}

/// An element of the group N fixing `γ(-∞)` and every horosphere `u = const`.
///
/// `w = (c, a)` acts by `v_vert ↦ v_vert + c - B(a, v)`, `v_hor ↦ v_hor + a`.
#[derive(Clone, Debug, PartialEq)]
pub struct NTranslation {
    params: ModelParams,
    w: Vec<f64>,
}

/// The N-element carrying `γ_0` onto `γ_w`.
pub fn n_translation(params: &ModelParams, w: &[f64]) -> Result<NTranslation, GeometryError> {
    params.check_v(w)?;
    Ok(NTranslation { params: *params, w: w.to_vec() })
}

impl NTranslation {
    pub fn offset(&self) -> &[f64] {
        &self.w
    }

    pub fn apply(&self, p: &HoroPoint) -> HoroPoint {
        let s = self.params.vert_dim();
        let b = bilinear(&self.params, &self.w, &p.v);
        let mut v: Vec<f64> = p.v.iter().zip(&self.w).map(|(x, y)| x + y).collect();
        for c in 0..s {
            v[c] -= b[c];
        }
        HoroPoint::new(p.u, v)
    }

    /// `self ∘ other`, again an element of N.
    pub fn compose(&self, other: &NTranslation) -> NTranslation {
        let s = self.params.vert_dim();
        let b = bilinear(&self.params, &self.w, &other.w);
        let mut w: Vec<f64> = self.w.iter().zip(&other.w).map(|(x, y)| x + y).collect();
        for c in 0..s {
            w[c] -= b[c];
        }
        NTranslation { params: self.params, w }
    }

    pub fn inverse(&self) -> NTranslation {
        NTranslation { params: self.params, w: self.w.iter().map(|x| -x).collect() }
    }
}

/// The dilation `τ_t : (u, v) ↦ (u - t, e^{2t} v_vert, e^{t} v_hor)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dilation {
    params: ModelParams,
    t: f64,
}

pub fn dilation_tau(params: &ModelParams, t: f64) -> Dilation {
    Dilation { params: *params, t }
}

impl Dilation {
    pub fn apply(&self, p: &HoroPoint) -> HoroPoint {
        let s = self.params.vert_dim();
        let (e2, e1) = ((2.0 * self.t).exp(), self.t.exp());
        let v = p.v.iter().enumerate().map(|(i, x)| if i < s { x * e2 } else { x * e1 }).collect();
        HoroPoint::new(p.u - self.t, v)
    }
}

/// Coordinates of `p` in the chart reversed by the swap `z_1 ↦ -z_1`.
///
/// In w-coordinates the swap is `(w_1, w_k) ↦ (w_1^{-1}, w_k w_1^{-1})`, so
/// `ū = u + log|w_1|`, `v̄_vert = -v_vert/|w_1|²`, `v̄_k = w_k w̄_1/|w_1|²`.
pub fn reverse_chart(params: &ModelParams, p: &HoroPoint) -> HoroPoint {
    let (s, d) = (params.vert_dim(), params.block_dim());
    let w1 = w1_of(params, p.u, &p.v);
    let n2 = w1.norm_sqr();
    let ubar = crate::model::busemann_plus_unchecked(params, p.u, &p.v);
    let mut v = Vec::with_capacity(p.v.len());
    v.extend(p.v[..s].iter().map(|x| -x / n2));
    let w1c = w1.conj();
    for k in 0..params.blocks() {
        let wk = crate::model::block(params, &p.v, k) * w1c / n2;
        v.extend_from_slice(&wk.components()[..d]);
    }
    HoroPoint::new(ubar, v)
}

/// The tagged union of supported isometries.
#[derive(Clone, Debug, PartialEq)]
pub enum Isometry {
    Mobius(MobiusMatrix),
    NTranslation(NTranslation),
    Dilation(Dilation),
    EndpointSwap,
}

impl Isometry {
    pub fn apply(&self, params: &ModelParams, p: &HoroPoint) -> Result<HoroPoint, GeometryError> {
        p.check(params)?;
        match self {
            Isometry::Mobius(h) => Ok(disk_to_horo(params, &mobius_apply(params, h, &horo_to_disk(params, p)?)?)),
            Isometry::NTranslation(n) => Ok(n.apply(p)),
            Isometry::Dilation(d) => Ok(d.apply(p)),
            Isometry::EndpointSwap => Ok(reverse_chart(params, p)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{busemann_plus, dist, dist_disk};
    use crate::params::Family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, p: &ModelParams) -> HoroPoint {
        HoroPoint::new(rng.random_range(-1.0..1.0), (0..p.vdim()).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn random_disk(rng: &mut ChaCha8Rng, p: &ModelParams) -> DiskPoint {
        horo_to_disk(p, &random_point(rng, p)).unwrap()
    }

    fn close(a: &HoroPoint, b: &HoroPoint, tol: f64) -> bool {
        (a.u - b.u).abs() <= tol && a.v.iter().zip(&b.v).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identity_acts_trivially() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = ModelParams::new(Family::H, 2).unwrap();
        let z = random_disk(&mut rng, &h);
        let id = MobiusMatrix::identity(&h);
        assert_eq!(mobius_apply(&h, &id, &z).unwrap(), z);
        assert_eq!(id.form_residual(), 0.0);
    }

    #[test]
    fn transvection_sends_point_to_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for fam in Family::ALL {
            let p = ModelParams::new(fam, 3).unwrap();
            assert_eq!(transvection_to_origin(&p, &DiskPoint::origin(&p)), MobiusMatrix::identity(&p));
            for _ in 0..50 {
                let z = random_disk(&mut rng, &p);
                let h = transvection_to_origin(&p, &z);
                assert!(h.form_residual() <= 1e-12, "{}", h.form_residual());
                let o = mobius_apply(&p, &h, &z).unwrap();
                assert!(o.norm_sqr().sqrt() < 1e-12);
                // Revalidated through the public constructor.
                assert!(MobiusMatrix::new(&p, h.entries.clone()).is_ok());
            }
        }
    }

    #[test]
    fn transvection_norm_identity() {
        // 1 - |h·w|² = |1 - ⟨z₀, w⟩|^{-2} (1 - |z₀|²)(1 - |w|²)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for fam in Family::ALL {
            let p = ModelParams::new(fam, 2).unwrap();
            for _ in 0..50 {
                let z0 = random_disk(&mut rng, &p);
                let w = random_disk(&mut rng, &p);
                let h = transvection_to_origin(&p, &z0);
                let hw = mobius_apply(&p, &h, &w).unwrap();
                let pair = z0.quaternions().iter().zip(w.quaternions()).fold(Quaternion::ZERO, |s, (a, b)| s + a.conj() * *b);
                let rhs = (1.0 - z0.norm_sqr()) * (1.0 - w.norm_sqr()) / (Quaternion::ONE - pair).norm_sqr();
                assert!((1.0 - hw.norm_sqr() - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mobius_preserves_distance_and_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for fam in Family::ALL {
            let p = ModelParams::new(fam, 3).unwrap();
            for _ in 0..50 {
                let (a, b, c) = (random_disk(&mut rng, &p), random_disk(&mut rng, &p), random_disk(&mut rng, &p));
                let h1 = transvection_to_origin(&p, &a);
                let h2 = transvection_to_origin(&p, &b);
                let d0 = dist_disk(&p, &b, &c).unwrap();
                let d1 = dist_disk(&p, &mobius_apply(&p, &h1, &b).unwrap(), &mobius_apply(&p, &h1, &c).unwrap()).unwrap();
                assert!((d0 - d1).abs() < 1e-10);
                let lhs = mobius_apply(&p, &h1.compose(&h2), &c).unwrap();
                let rhs = mobius_apply(&p, &h1, &mobius_apply(&p, &h2, &c).unwrap()).unwrap();
                for (x, y) in lhs.reals().iter().zip(rhs.reals()) {
                    assert!((x - y).abs() < 1e-12);
                }
                assert!(h1.compose(&h2).form_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn transvection_example_preserves_distance_to_origin() {
        let c = ModelParams::new(Family::C, 2).unwrap();
        let z = DiskPoint::from_reals(&c, &[0.5, 0.0, 0.0, 0.0]).unwrap();
        let o = DiskPoint::origin(&c);
        let h = transvection_to_origin(&c, &z);
        let d = dist_disk(&c, &mobius_apply(&c, &h, &z).unwrap(), &mobius_apply(&c, &h, &o).unwrap()).unwrap();
        assert!((d - 0.5f64.atanh()).abs() < 1e-14);
    }

    #[test]
    fn non_isometry_is_rejected() {
        let r = ModelParams::new(Family::R, 2).unwrap();
        let mut e = MobiusMatrix::identity(&r).entries;
        e[0] = Quaternion::real(2.0);
        assert!(matches!(MobiusMatrix::new(&r, e), Err(GeometryError::FormViolation(_))));
    }

    #[test]
    fn n_translation_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = ModelParams::new(Family::R, 3).unwrap();
        let n = n_translation(&r, &[0.5, -1.0]).unwrap();
        let x = HoroPoint::new(0.3, vec![1.0, 2.0]);
        assert_eq!(n.apply(&x), HoroPoint::new(0.3, vec![1.5, 1.0]));
        for fam in Family::ALL {
            let p = ModelParams::new(fam, 2).unwrap();
            let zero = n_translation(&p, &vec![0.0; p.vdim()]).unwrap();
            let x = random_point(&mut rng, &p);
            assert_eq!(zero.apply(&x), x);
            for _ in 0..50 {
                let w: Vec<f64> = (0..p.vdim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let w2: Vec<f64> = (0..p.vdim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let (n1, n2) = (n_translation(&p, &w).unwrap(), n_translation(&p, &w2).unwrap());
                let (a, b) = (random_point(&mut rng, &p), random_point(&mut rng, &p));
                let (na, nb) = (n1.apply(&a), n1.apply(&b));
                assert_eq!(na.u, a.u);
                let d0 = dist(&p, &a, &b).unwrap();
                assert!((d0 - dist(&p, &na, &nb).unwrap()).abs() < 1e-10 * d0.max(1.0));
                // Group law.
                assert!(close(&n1.compose(&n2).apply(&a), &n1.apply(&n2.apply(&a)), 1e-12));
                assert!(close(&n1.inverse().apply(&na), &a, 1e-12));
                // γ_0 onto γ_w.
                let t = rng.random_range(-3.0..3.0);
                assert!(close(&n1.apply(&HoroPoint::new(t, vec![0.0; p.vdim()])), &HoroPoint::new(t, w.clone()), 0.0));
            }
        }
    }

    #[test]
    fn complex_n_translation_matches_explicit_formula() {
        // v1 + w1 - (w2 v3 - w3 v2), v2 + w2, v3 + w3
        let c = ModelParams::new(Family::C, 2).unwrap();
        let w = [0.3, -0.4, 0.9];
        let v = [0.1, 0.7, -0.2];
        let out = n_translation(&c, &w).unwrap().apply(&HoroPoint::new(0.0, v.to_vec()));
        let v1 = v[0] + w[0] - (w[1] * v[2] - w[2] * v[1]);
        assert!((out.v[0] - v1).abs() < 1e-15);
        assert_eq!(out.v[1], v[1] + w[1]);
    }

    #[test]
    fn dilation_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for fam in Family::ALL {
            let p = ModelParams::new(fam, 2).unwrap();
            let x = random_point(&mut rng, &p);
            assert_eq!(dilation_tau(&p, 0.0).apply(&x), x);
            for _ in 0..50 {
                let t = rng.random_range(-2.0..2.0);
                let tau = dilation_tau(&p, t);
                let s = rng.random_range(-3.0..3.0);
                let g = HoroPoint::new(s, vec![0.0; p.vdim()]);
                assert_eq!(tau.apply(&g), HoroPoint::new(s - t, vec![0.0; p.vdim()]));
                let (a, b) = (random_point(&mut rng, &p), random_point(&mut rng, &p));
                let d0 = dist(&p, &a, &b).unwrap();
                assert!((d0 - dist(&p, &tau.apply(&a), &tau.apply(&b)).unwrap()).abs() < 1e-10 * d0.max(1.0));
            }
        }
    }

    #[test]
    fn reverse_chart_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for fam in Family::ALL {
            let p = ModelParams::new(fam, 3).unwrap();
            for t in [-2.0, 0.0, 1.5] {
                let g = HoroPoint::new(t, vec![0.0; p.vdim()]);
                assert!(close(&reverse_chart(&p, &g), &HoroPoint::new(-t, vec![0.0; p.vdim()]), 1e-15));
            }
            for _ in 0..100 {
                let x = random_point(&mut rng, &p);
                let y = reverse_chart(&p, &x);
                assert!((y.u - busemann_plus(&p, &x)).abs() < 1e-12);
                assert!(close(&reverse_chart(&p, &y), &x, 1e-12));
                // Agrees with swapping z_1 in the disk.
                let mut z = horo_to_disk(&p, &x).unwrap().quaternions().to_vec();
                z[0] = -z[0];
                let swapped = disk_to_horo(&p, &DiskPoint::from_quaternions(&p, z).unwrap());
                assert!(close(&swapped, &y, 1e-11));
                // The swap is an isometry.
                let b = random_point(&mut rng, &p);
                let d0 = dist(&p, &x, &b).unwrap();
                let d1 = dist(&p, &y, &reverse_chart(&p, &b)).unwrap();
                assert!((d0 - d1).abs() < 1e-10 * d0.max(1.0));
            }
        }
    }

    #[test]
    fn isometry_enum_preserves_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for fam in Family::ALL {
            let p = ModelParams::new(fam, 2).unwrap();
            let z = random_disk(&mut rng, &p);
            let w: Vec<f64> = (0..p.vdim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let isos = [
                Isometry::Mobius(transvection_to_origin(&p, &z)),
                Isometry::NTranslation(n_translation(&p, &w).unwrap()),
                Isometry::Dilation(dilation_tau(&p, 0.7)),
                Isometry::EndpointSwap,
            ];
            for iso in &isos {
                for _ in 0..30 {
                    let (a, b) = (random_point(&mut rng, &p), random_point(&mut rng, &p));
                    let d0 = dist(&p, &a, &b).unwrap();
                    let d1 = dist(&p, &iso.apply(&p, &a).unwrap(), &iso.apply(&p, &b).unwrap()).unwrap();
                    assert!((d0 - d1).abs() < 1e-10 * d0.max(1.0), "{iso:?}");
                }
            }
        }
    }
}
