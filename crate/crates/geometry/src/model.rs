//! Points, the horospherical chart, distances and Busemann functions.
//!
//! `v` is laid out as the `vert_dim` imaginary coordinates followed by the
//! `rank - 1` horizontal blocks, each a K-number stored in `block_dim` reals.

use crate::params::{Family, ModelParams};
use crate::quaternion::{KScalar, Quaternion};
use crate::GeometryError;

/// A point in horospherical coordinates `(u, v)` with `u = f_{-γ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HoroPoint {
    pub u: f64,
    pub v: Vec<f64>,
}

impl HoroPoint {
    pub fn new(u: f64, v: Vec<f64>) -> Self {
        HoroPoint { u, v }
    }

    /// The point `γ(0)` where the chart is centred.
    pub fn origin(params: &ModelParams) -> Self {
        HoroPoint { u: 0.0, v: vec![0.0; params.vdim()] }
    }

    /// Builds a point from the flat vector `(u, v_1, ..., v_{m-1})`.
    pub fn from_coords(params: &ModelParams, c: &[f64]) -> Result<Self, GeometryError> {
        if c.len() != params.m {
            return Err(GeometryError::DimensionMismatch { expected: params.m, got: c.len() });
        }
        let p = HoroPoint { u: c[0], v: c[1..].to_vec() };
        p.check(params)?;
        Ok(p)
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.v.len() + 1);
        c.push(self.u);
        c.extend_from_slice(&self.v);
        c
    }

    pub fn check(&self, params: &ModelParams) -> Result<(), GeometryError> {
        params.check_v(&self.v)?;
        if !self.u.is_finite() || self.v.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(())
    }
}

/// A point of the unit-ball model, stored as quaternions restricted to K.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskPoint {
    family: Family,
    z: Vec<Quaternion>,
}

impl DiskPoint {
    /// Validates that every entry lies in K and that `‖z‖ < 1`.
    pub fn from_quaternions(params: &ModelParams, z: Vec<Quaternion>) -> Result<Self, GeometryError> {
        if z.len() != params.rank {
            return Err(GeometryError::DimensionMismatch { expected: params.rank, got: z.len() });
        }
        let d = params.block_dim();
        for q in &z {
            let c = q.components();
            if c[d..].iter().any(|&x| x != 0.0) {
                return Err(GeometryError::NotInFamily(params.family));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
        }
        let n: f64 = z.iter().map(Quaternion::norm_sqr).sum();
        if n >= 1.0 {
            return Err(GeometryError::OutsideDisk { norm_sqr: n });
        }
        Ok(DiskPoint { family: params.family, z })
    }

    pub fn new(params: &ModelParams, z: &[KScalar]) -> Result<Self, GeometryError> {
        if z.iter().any(|s| s.family() != params.family) {
            return Err(GeometryError::NotInFamily(params.family));
        }
        Self::from_quaternions(params, z.iter().map(KScalar::to_quaternion).collect())
    }

    /// The origin `o = 0`.
    pub fn origin(params: &ModelParams) -> Self {
        DiskPoint { family: params.family, z: vec![Quaternion::ZERO; params.rank] }
    }

    /// Builds a point from `rank * block_dim` real coordinates.
    pub fn from_reals(params: &ModelParams, x: &[f64]) -> Result<Self, GeometryError> {
        let d = params.block_dim();
        if x.len() != params.m {
            return Err(GeometryError::DimensionMismatch { expected: params.m, got: x.len() });
        }
        let z = x.chunks(d).map(Quaternion::from_slice).collect();
        Self::from_quaternions(params, z)
    }

    pub fn reals(&self) -> Vec<f64> {
        let d = self.family.dim();
        self.z.iter().flat_map(|q| q.components()[..d].to_vec()).collect()
    }

    pub fn quaternions(&self) -> &[Quaternion] {
        &self.z
    }

    pub fn scalars(&self) -> Vec<KScalar> {
        self.z.iter().map(|&q| KScalar::from_quaternion(self.family, q)).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z.iter().map(Quaternion::norm_sqr).sum()
    }
}

/// The K-valued block `k` (0-based) of the horizontal part of `v`.
pub(crate) fn block(params: &ModelParams, v: &[f64], k: usize) -> Quaternion {
    let (s, d) = (params.vert_dim(), params.block_dim());
    Quaternion::from_slice(&v[s + k * d..s + (k + 1) * d])
}

/// `Σ_k Im(conj(a_k) b_k)` over the horizontal blocks, as a vector of length `vert_dim`.
///
/// Antisymmetric in `(a, b)`; the vertical parts of `a` and `b` are ignored.
pub fn bilinear(params: &ModelParams, a: &[f64], b: &[f64]) -> [f64; 3] {
    let mut acc = Quaternion::ZERO;
    if params.vert_dim() == 0 {
        return [0.0; 3];
    }
    for k in 0..params.blocks() {
        acc += block(params, a, k).conj() * block(params, b, k);
    }
    acc.imag()
}

/// Euclidean norm squared of the horizontal part of `v`.
pub(crate) fn horizontal_norm_sqr(params: &ModelParams, v: &[f64]) -> f64 {
    v[params.vert_dim()..].iter().map(|x| x * x).sum()
}

/// Euclidean norm squared of the vertical part of `v`.
pub(crate) fn vertical_norm_sqr(params: &ModelParams, v: &[f64]) -> f64 {
    v[..params.vert_dim()].iter().map(|x| x * x).sum()
}

/// The quadratic form `Q_p(ξ) = e^{4u}|ξ_vert + B(v, ξ)|² + e^{2u}|ξ_hor|²`.
pub fn q_form(params: &ModelParams, p: &HoroPoint, xi: &[f64]) -> Result<f64, GeometryError> {
    params.check_v(&p.v)?;
    params.check_v(xi)?;
    Ok(q_form_unchecked(params, p.u, &p.v, xi))
}

pub fn q_form_unchecked(params: &ModelParams, u: f64, v: &[f64], xi: &[f64]) -> f64 {
    let s = params.vert_dim();
    let hor = horizontal_norm_sqr(params, xi);
    if s == 0 {
        return (2.0 * u).exp() * hor;
    }
    let b = bilinear(params, v, xi);
    let theta: f64 = (0..s).map(|c| (xi[c] + b[c]).powi(2)).sum();
    (4.0 * u).exp() * theta + (2.0 * u).exp() * hor
}

/// Maps a disk point to horospherical coordinates.
pub fn disk_to_horo(params: &ModelParams, z: &DiskPoint) -> HoroPoint {
    let zq = z.quaternions();
    let one_plus = Quaternion::ONE + zq[0];
    // 1 + z_1 vanishes only at the boundary point -e_1.
    let inv = one_plus.inv().expect("1 + z_1 is invertible inside the disk");
    let w1 = (Quaternion::ONE - zq[0]) * inv;
    let u = (one_plus.norm() / (1.0 - z.norm_sqr()).sqrt()).ln();
    let (s, d) = (params.vert_dim(), params.block_dim());
    let mut v = Vec::with_capacity(params.vdim());
    let im = w1.imag();
    v.extend((0..s).map(|c| -0.5 * im[c]));
    for zk in &zq[1..] {
        let wk = *zk * inv;
        v.extend_from_slice(&wk.components()[..d]);
    }
    HoroPoint { u, v }
}

/// The quaternion `w_1` of the w-coordinates of `p`.
pub(crate) fn w1_of(params: &ModelParams, u: f64, v: &[f64]) -> Quaternion {
    let rho = (-2.0 * u).exp() + horizontal_norm_sqr(params, v);
    let s = params.vert_dim();
    let vv: Vec<f64> = v[..s].iter().map(|x| -2.0 * x).collect();
    Quaternion::real(rho) + Quaternion::pure(&vv)
}

/// Inverse of [`disk_to_horo`].
pub fn horo_to_disk(params: &ModelParams, p: &HoroPoint) -> Result<DiskPoint, GeometryError> {
    p.check(params)?;
    let w1 = w1_of(params, p.u, &p.v);
    let inv = (Quaternion::ONE + w1).inv().ok_or(GeometryError::NonFinite)?;
    let mut z = Vec::with_capacity(params.rank);
    z.push((Quaternion::ONE - w1) * inv);
    for k in 0..params.blocks() {
        z.push(block(params, &p.v, k) * inv * 2.0);
    }
    DiskPoint::from_quaternions(params, z)
}

/// `Σ_k conj(a_k) b_k`.
fn hermitian(a: &[Quaternion], b: &[Quaternion]) -> Quaternion {
    a.iter().zip(b).fold(Quaternion::ZERO, |acc, (x, y)| acc + x.conj() * *y)
}

/// Distance in the disk model, `cosh d = |1 - ⟨z, w⟩| / sqrt((1-|z|²)(1-|w|²))`.
///
/// Evaluated through `sinh² d = ((1-|z|²)|δ|² + |⟨z,δ⟩|²) / ((1-|z|²)(1-|w|²))`
/// with `δ = w - z`, which keeps full relative accuracy for nearby points.
pub fn dist_disk(params: &ModelParams, z: &DiskPoint, w: &DiskPoint) -> Result<f64, GeometryError> {
    for p in [z, w] {
        if p.family != params.family || p.z.len() != params.rank {
            return Err(GeometryError::NotInFamily(params.family));
        }
        let n = p.norm_sqr();
        if n >= 1.0 {
            return Err(GeometryError::OutsideDisk { norm_sqr: n });
        }
    }
    let delta: Vec<Quaternion> = w.z.iter().zip(&z.z).map(|(a, b)| *a - *b).collect();
    let nz = 1.0 - z.norm_sqr();
    let nw = 1.0 - w.norm_sqr();
    let dd: f64 = delta.iter().map(Quaternion::norm_sqr).sum();
    let cross = hermitian(&z.z, &delta).norm_sqr();
    let s2 = (nz * dd + cross) / (nz * nw);
    Ok(s2.sqrt().asinh())
}

/// Distance between two points given in horospherical coordinates.
///
/// Closed form `sinh² d = sinh²Δu + 2q cosh Δu + q² + e^{2(u+u')}|I|²` with
/// `q = ½e^{u+u'}|Δw|²` and `I = Δv_vert + B(v, Δv)`; stable for large `|u|`.
pub fn dist(params: &ModelParams, p: &HoroPoint, q: &HoroPoint) -> Result<f64, GeometryError> {
    p.check(params)?;
    q.check(params)?;
    Ok(dist_unchecked(params, p.u, &p.v, q.u, &q.v))
}

pub fn dist_unchecked(params: &ModelParams, u1: f64, v1: &[f64], u2: f64, v2: &[f64]) -> f64 {
    let s = params.vert_dim();
    let dv: Vec<f64> = v2.iter().zip(v1).map(|(a, b)| a - b).collect();
    let du = u2 - u1;
    let sum = u1 + u2;
    let q = 0.5 * sum.exp() * horizontal_norm_sqr(params, &dv);
    let mut s2 = du.sinh().powi(2) + 2.0 * q * du.cosh() + q * q;
    if s > 0 {
        let b = bilinear(params, v1, &dv);
        let i2: f64 = (0..s).map(|c| (dv[c] + b[c]).powi(2)).sum();
        s2 += (2.0 * sum).exp() * i2;
    }
    s2.sqrt().asinh()
}

/// `f_{-γ}(p)`, which is the `u` coordinate itself.
pub fn busemann_minus(_params: &ModelParams, p: &HoroPoint) -> f64 {
    p.u
}

/// `log(e^a + e^b)` without overflow.
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `f_γ(p)` from `e^{2ū} = (e^{-u} + e^{u}|v_hor|²)² + 4e^{2u}|v_vert|²`.
pub fn busemann_plus(params: &ModelParams, p: &HoroPoint) -> f64 {
    busemann_plus_unchecked(params, p.u, &p.v)
}

pub fn busemann_plus_unchecked(params: &ModelParams, u: f64, v: &[f64]) -> f64 {
    let nh = horizontal_norm_sqr(params, v);
    let nv = vertical_norm_sqr(params, v);
    if u.abs() < 150.0 {
        // Direct evaluation is monotone in |v| under rounding.
        let a = (-u).exp() + u.exp() * nh;
        let e = a * a + 4.0 * (2.0 * u).exp() * nv;
        if e.is_finite() && e > 0.0 {
            return 0.5 * e.ln();
        }
    }
    let log_a = log_add_exp(-u, u + nh.ln());
    let log_b = if nv > 0.0 { 4f64.ln() + 2.0 * u + nv.ln() } else { f64::NEG_INFINITY };
    0.5 * log_add_exp(2.0 * log_a, log_b)
}
