//! Gauss–Legendre rules and surface quadrature on shells `{dist(x, Σ_i) = s}`.

use std::f64::consts::PI;

use crate::kernel::{axpy, cross, norm, scale, sub, ComponentGeometry, SingularComponent};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A quadrature node on a shell with its outward unit normal (pointing away from Σ).
#[derive(Clone, Copy, Debug)]
pub struct ShellSample {
    pub x: [f64; 3],
    pub normal: [f64; 3],
    pub weight: f64,
}

const RADIAL_ORDER: usize = 8;

/// Quadrature of the shell at distance `s` from the component.
///
/// Azimuthal directions use the midpoint rule, which is spectrally accurate
/// for periodic integrands; the remaining directions use Gauss–Legendre.
pub fn shell_samples(comp: &SingularComponent, s: f64) -> Vec<ShellSample> {
    match &comp.geometry {
        ComponentGeometry::Point(c) if c.len() == 2 => {
            let m = 4096;
            (0..m)
                .map(|k| {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    let nrm = [phi.cos(), phi.sin(), 0.0];
                    ShellSample { x: [c[0] + s * nrm[0], c[1] + s * nrm[1], 0.0], normal: nrm, weight: 2.0 * PI * s / m as f64 }
                })
                .collect()
        }
        ComponentGeometry::Point(c) => {
            let centre = [c[0], c[1], c[2]];
            let mut out = cap(&centre, &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], s);
            out.extend(cap(&centre, &[0.0, 0.0, -1.0], &[1.0, 0.0, 0.0], &[0.0, -1.0, 0.0], s));
            out
        }
        ComponentGeometry::Segment { p, q } => {
            let d = sub(q, p);
            let len = norm(&d);
            let e = scale(&d, 1.0 / len);
            let a = unit_perpendicular(&e);
            let b = cross(&e, &a);
            let (gl, gw) = gauss_legendre(RADIAL_ORDER);
            let panels = ((4.0 * len / s).ceil() as usize).clamp(16, 4096);
            let m = 64;
            let mut out = Vec::new();
            for k in 0..panels {
                let (t0, t1) = (len * k as f64 / panels as f64, len * (k + 1) as f64 / panels as f64);
                for (xi, wi) in gl.iter().zip(&gw) {
                    let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * xi;
                    let base = axpy(p, t, &e);
                    for j in 0..m {
                        let phi = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                        let nrm = axpy(&scale(&a, phi.cos()), phi.sin(), &b);
                        out.push(ShellSample {
                            x: axpy(&base, s, &nrm),
                            normal: nrm,
                            weight: wi * 0.5 * (t1 - t0) * s * 2.0 * PI / m as f64,
                        });
                    }
                }
            }
            out.extend(cap(q, &e, &a, &b, s));
            out.extend(cap(p, &scale(&e, -1.0), &b, &a, s));
            out
        }
    }
}

/// Hemisphere of radius `s` about `centre` in the direction `axis`, with `(a, b)` completing a frame.
fn cap(centre: &[f64; 3], axis: &[f64; 3], a: &[f64; 3], b: &[f64; 3], s: f64) -> Vec<ShellSample> {
    let (gl, gw) = gauss_legendre(48);
    let m = 128;
    let mut out = Vec::with_capacity(gl.len() * m);
    for (xi, wi) in gl.iter().zip(&gw) {
        // z = cos θ ∈ [0, 1], where dS = s² dz dφ.
        let z = 0.5 * (1.0 + xi);
        let rho = (1.0 - z * z).sqrt();
        for j in 0..m {
            let phi = 2.0 * PI * (j as f64 + 0.5) / m as f64;
            let ring = axpy(&scale(a, phi.cos()), phi.sin(), b);
            let nrm = axpy(&scale(axis, z), rho, &ring);
            out.push(ShellSample { x: axpy(centre, s, &nrm), normal: nrm, weight: 0.5 * wi * s * s * 2.0 * PI / m as f64 });
        }
    }
    out
}

fn unit_perpendicular(e: &[f64; 3]) -> [f64; 3] {
    let k = (0..3).min_by(|&i, &j| e[i].abs().total_cmp(&e[j].abs())).unwrap_or(0);
    let mut t = [0.0; 3];
    t[k] = 1.0;
    let c = cross(e, &t);
    scale(&c, 1.0 / norm(&c))
}
