//! The Riemannian metric `du² + Q_p(dv)` in horospherical coordinates.

use nalgebra::DMatrix;

use crate::model::{bilinear, block, HoroPoint};
use crate::params::ModelParams;
use crate::quaternion::Quaternion;
use crate::GeometryError;

/// The full `m × m` metric tensor at `p`, block diagonal `diag(1, Q_p)`.
pub fn metric_tensor(params: &ModelParams, p: &HoroPoint) -> Result<DMatrix<f64>, GeometryError> {
    p.check(params)?;
    let n = params.vdim();
    let (s, d) = (params.vert_dim(), params.block_dim());
    let e4 = (4.0 * p.u).exp();
    let e2 = (2.0 * p.u).exp();
    // Columns of the vertical map ξ ↦ ξ_vert + B(v, ξ).
    let mut a = DMatrix::<f64>::zeros(s, n);
    for c in 0..s {
        a[(c, c)] = 1.0;
    }
    for k in 0..params.blocks() {
        let wk = block(params, &p.v, k).conj();
        for e in 0..d {
            let col = wk * unit(e);
            let im = col.imag();
            for c in 0..s {
                a[(c, s + k * d + e)] = im[c];
            }
        }
    }
    let mut q = a.transpose() * &a * e4;
    for j in s..n {
        q[(j, j)] += e2;
    }
    let mut g = DMatrix::<f64>::zeros(n + 1, n + 1);
    g[(0, 0)] = 1.0;
    g.view_mut((1, 1), (n, n)).copy_from(&q);
    Ok(g)
}

fn unit(e: usize) -> Quaternion {
    [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K][e]
}

/// Solves `Q_p ξ = r` using the explicit factor `Q = SᵀS`, with
/// `S ξ = (e^{2u}(ξ_vert + B(v, ξ)), e^{u} ξ_hor)`.
pub fn q_solve(params: &ModelParams, p: &HoroPoint, r: &[f64]) -> Result<Vec<f64>, GeometryError> {
    p.check(params)?;
    params.check_v(r)?;
    Ok(q_solve_unchecked(params, p.u, &p.v, r))
}

pub fn q_solve_unchecked(params: &ModelParams, u: f64, v: &[f64], r: &[f64]) -> Vec<f64> {
    let (s, d) = (params.vert_dim(), params.block_dim());
    let rv = Quaternion::pure(&r[..s]);
    let em2 = (-2.0 * u).exp();
    let mut x = vec![0.0; r.len()];
    // Horizontal part: e^{-2u}(r_hor - A_horᵀ r_vert), where A_horᵀ r_vert = w_k R blockwise.
    for k in 0..params.blocks() {
        let t = block(params, v, k) * rv;
        let tc = t.components();
        for e in 0..d {
            let j = s + k * d + e;
            x[j] = em2 * (r[j] - tc[e]);
        }
    }
    if s > 0 {
        let em4 = (-4.0 * u).exp();
        let b = bilinear(params, v, &x);
        for c in 0..s {
            x[c] = em4 * r[c] - b[c];
        }
    }
    x
}

/// Squared length of a covector `(∂_u f, ∂_v f)` under the inverse metric.
pub fn covector_norm_sqr(params: &ModelParams, p: &HoroPoint, df: &[f64]) -> Result<f64, GeometryError> {
    if df.len() != params.m {
        return Err(GeometryError::DimensionMismatch { expected: params.m, got: df.len() });
    }
    let x = q_solve(params, p, &df[1..])?;
    Ok(df[0] * df[0] + x.iter().zip(&df[1..]).map(|(a, b)| a * b).sum::<f64>())
}

/// Squared length `g(ẋ, ẋ)` of a tangent vector `(u̇, v̇)` at `p`.
pub fn vector_norm_sqr(params: &ModelParams, p: &HoroPoint, dx: &[f64]) -> Result<f64, GeometryError> {
    if dx.len() != params.m {
        return Err(GeometryError::DimensionMismatch { expected: params.m, got: dx.len() });
    }
    Ok(dx[0] * dx[0] + crate::model::q_form(params, p, &dx[1..])?)
}

/// Geodesic acceleration `-Γ(ẋ, ẋ)` from the analytic derivatives of the metric.
pub(crate) fn geodesic_acceleration(params: &ModelParams, u: f64, v: &[f64], du: f64, dv: &[f64], out: &mut [f64]) {
    let (s, d) = (params.vert_dim(), params.block_dim());
    let e4 = (4.0 * u).exp();
    let e2 = (2.0 * u).exp();
    let b = bilinear(params, v, dv);
    let mut theta = [0.0; 3];
    for c in 0..s {
        theta[c] = dv[c] + b[c];
    }
    let th2: f64 = theta.iter().map(|x| x * x).sum();
    let hor2: f64 = dv[s..].iter().map(|x| x * x).sum();
    out[0] = 2.0 * e4 * th2 + e2 * hor2;
    let big = Quaternion::pure(&theta[..s]);
    // rhs = (d/dτ)(Q v̇) - ½ ∂_v(v̇ᵀQ v̇), then v̈ = -Q^{-1} rhs.
    let mut rhs = vec![0.0; dv.len()];
    for c in 0..s {
        rhs[c] = 4.0 * du * e4 * theta[c];
    }
    for k in 0..params.blocks() {
        let wk = block(params, v, k);
        let dk = block(params, dv, k);
        let t = (wk * big) * (4.0 * du * e4) + dk * (2.0 * du * e2) + (dk * big) * (2.0 * e4);
        let tc = t.components();
        for e in 0..d {
            rhs[s + k * d + e] = tc[e];
        }
    }
    let acc = q_solve_unchecked(params, u, v, &rhs);
    for (o, a) in out[1..].iter_mut().zip(acc) {
        *o = -a;
    }
}
