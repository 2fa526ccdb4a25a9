//! Geodesics: the vertical family `γ_v` and a numerical integrator for arbitrary ones.

use crate::metric::{geodesic_acceleration, vector_norm_sqr};
use crate::model::HoroPoint;
use crate::params::ModelParams;
use crate::GeometryError;

/// `γ_{v0}(t) = (t, v0)`, a unit-speed geodesic asymptotic to `γ(-∞)`.
pub fn geodesic_vertical(params: &ModelParams, v0: &[f64], t: f64) -> Result<HoroPoint, GeometryError> {
    params.check_v(v0)?;
    Ok(HoroPoint::new(t, v0.to_vec()))
}

/// Rescales a coordinate direction to unit length at `p`.
pub fn normalize_direction(params: &ModelParams, p: &HoroPoint, dir: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let n = vector_norm_sqr(params, p, dir)?.sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(GeometryError::DegenerateDirection);
    }
    Ok(dir.iter().map(|x| x / n).collect())
}

/// Tolerances of the step-halving integrator.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Endpoint change between successive halvings, per unit time.
    pub tol: f64,
    /// Largest admissible number of RK4 steps.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: 1e-8, max_steps: 1 << 22 }
    }
}

/// Follows the geodesic from `p` with unit initial velocity `dir` for time `t`.
pub fn geodesic_ode(params: &ModelParams, p: &HoroPoint, dir: &[f64], t: f64) -> Result<HoroPoint, GeometryError> {
    geodesic_ode_with(params, p, dir, t, OdeOptions::default())
}

pub fn geodesic_ode_with(
    params: &ModelParams,
    p: &HoroPoint,
    dir: &[f64],
    t: f64,
    opts: OdeOptions,
) -> Result<HoroPoint, GeometryError> {
    p.check(params)?;
    let speed = vector_norm_sqr(params, p, dir)?.sqrt();
    if (speed - 1.0).abs() > 1e-9 {
        return Err(GeometryError::NotUnitSpeed(speed));
    }
    if t == 0.0 {
        return Ok(p.clone());
    }
    let m = params.m;
    let mut y0 = Vec::with_capacity(2 * m);
    y0.push(p.u);
    y0.extend_from_slice(&p.v);
    y0.extend_from_slice(dir);
    let tol = opts.tol * t.abs().max(1.0);
    let mut steps = ((8.0 * t.abs()).ceil() as usize).max(8);
    let mut prev = rk4(params, &y0, t, steps);
    loop {
        steps *= 2;
        if steps > opts.max_steps {
            return Err(GeometryError::ConvergenceFailure(format!(
                "geodesic integration did not settle within {} steps",
                opts.max_steps
            )));
        }
        let next = rk4(params, &y0, t, steps);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let change = next[..m].iter().zip(&prev[..m]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev = next;
        if change < tol {
            break;
        }
    }
    Ok(HoroPoint::new(prev[0], prev[1..m].to_vec()))
}

fn rk4(params: &ModelParams, y0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let n = y0.len();
    let h = t / steps as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for _ in 0..steps {
        field(params, &y, &mut k1);
        axpy(&y, 0.5 * h, &k1, &mut tmp);
        field(params, &tmp, &mut k2);
        axpy(&y, 0.5 * h, &k2, &mut tmp);
        field(params, &tmp, &mut k3);
        axpy(&y, h, &k3, &mut tmp);
        field(params, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

fn axpy(y: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + a * ki;
    }
}

fn field(params: &ModelParams, y: &[f64], out: &mut [f64]) {
    let m = params.m;
    out[..m].copy_from_slice(&y[m..]);
    let (x, dx) = y.split_at(m);
    geodesic_acceleration(params, x[0], &x[1..], dx[0], &dx[1..], &mut out[m..]);
}
