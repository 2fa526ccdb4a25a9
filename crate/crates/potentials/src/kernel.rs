//! Free-space Laplace kernels and the closed-form potentials of point and
//! segment sources.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::PotentialError;

/// The fundamental solution `Γ` of `-Δ` in `R^n` for `n ∈ {2, 3}`.
pub fn fundamental_solution(n: usize, r: f64) -> Result<f64, PotentialError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(PotentialError::Domain(format!("kernel radius must be positive and finite, got {r}")));
    }
    match n {
        2 => Ok(-r.ln() / (2.0 * PI)),
        3 => Ok(1.0 / (4.0 * PI * r)),
        _ => Err(PotentialError::Domain(format!("kernels exist for n = 2, 3 only, got {n}"))),
    }
}

/// Support of a singular measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentGeometry {
    Point(Vec<f64>),
    Segment { p: [f64; 3], q: [f64; 3] },
}

/// A singular component `Σ_i` with constant density and target offset `w_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularComponent {
    pub geometry: ComponentGeometry,
    pub density: f64,
    /// Constant `v`-coordinate of the geodesic `γ_i` the component is mapped onto.
    pub offset: Vec<f64>,
}

impl SingularComponent {
    pub fn point(x: &[f64], density: f64, offset: Vec<f64>) -> Result<Self, PotentialError> {
        if !(2..=3).contains(&x.len()) || x.iter().any(|c| !c.is_finite()) {
            return Err(PotentialError::Configuration(format!("invalid point location {x:?}")));
        }
        Self::checked(ComponentGeometry::Point(x.to_vec()), density, offset)
    }

    pub fn segment(p: [f64; 3], q: [f64; 3], density: f64, offset: Vec<f64>) -> Result<Self, PotentialError> {
        let len = norm(&sub(&q, &p));
        if !(len > 0.0 && len.is_finite()) {
            return Err(PotentialError::Configuration("segment must have positive finite length".into()));
        }
        Self::checked(ComponentGeometry::Segment { p, q }, density, offset)
    }

    fn checked(geometry: ComponentGeometry, density: f64, offset: Vec<f64>) -> Result<Self, PotentialError> {
        if !(density > 0.0 && density.is_finite()) {
            return Err(PotentialError::Configuration(format!("density must be positive, got {density}")));
        }
        if offset.iter().any(|c| !c.is_finite()) {
            return Err(PotentialError::Configuration("target offset must be finite".into()));
        }
        Ok(SingularComponent { geometry, density, offset })
    }

    /// Ambient dimension `n` the component lives in.
    pub fn dim(&self) -> usize {
        match &self.geometry {
            ComponentGeometry::Point(x) => x.len(),
            ComponentGeometry::Segment { .. } => 3,
        }
    }

    /// Total mass of the measure (its charge).
    pub fn mass(&self) -> f64 {
        match &self.geometry {
            ComponentGeometry::Point(_) => self.density,
            ComponentGeometry::Segment { p, q } => self.density * norm(&sub(q, p)),
        }
    }

    /// Euclidean distance from `x` to the support.
    pub fn distance(&self, x: &[f64]) -> f64 {
        norm(&sub(&pad(x), &self.closest_point(x)))
    }

    /// Closest point of the support to `x`.
    pub fn closest_point(&self, x: &[f64]) -> [f64; 3] {
        match &self.geometry {
            ComponentGeometry::Point(c) => pad(c),
            ComponentGeometry::Segment { p, q } => {
                let d = sub(q, p);
                let t = (dot(&sub(&pad(x), p), &d) / dot(&d, &d)).clamp(0.0, 1.0);
                axpy(p, t, &d)
            }
        }
    }

    /// Max-norm distance from `x` to the support.
    pub fn distance_max_norm(&self, x: &[f64]) -> f64 {
        let x = pad(x);
        let n = self.dim();
        let f = |y: &[f64; 3]| (0..n).map(|k| (x[k] - y[k]).abs()).fold(0.0, f64::max);
        match &self.geometry {
            ComponentGeometry::Point(c) => f(&pad(c)),
            ComponentGeometry::Segment { p, q } => {
                // Convex in the segment parameter, so golden-section search is exact up to tolerance.
                let d = sub(q, p);
                let g = |t: f64| f(&axpy(p, t, &d));
                let (mut a, mut b) = (0.0, 1.0);
                let r = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..120 {
                    let c = b - r * (b - a);
                    let e = a + r * (b - a);
                    if g(c) <= g(e) {
                        b = e;
                    } else {
                        a = c;
                    }
                }
                g(0.5 * (a + b)).min(g(0.0)).min(g(1.0))
            }
        }
    }

    /// Minimal Euclidean distance between two supports.
    pub fn separation(&self, other: &SingularComponent) -> f64 {
        use ComponentGeometry::*;
        match (&self.geometry, &other.geometry) {
            (Point(a), _) => other.distance(a),
            (_, Point(b)) => self.distance(b),
            (Segment { p: p1, q: q1 }, Segment { p: p2, q: q2 }) => segment_distance(p1, q1, p2, q2),
        }
    }

    /// The free-space potential `μ * Γ` at `x`.
    pub fn closed_form(&self, x: &[f64]) -> Result<f64, PotentialError> {
        self.check_point(x)?;
        match &self.geometry {
            ComponentGeometry::Point(c) => {
                let r = norm(&sub(&pad(x), &pad(c)));
                Ok(self.density * fundamental_solution(c.len(), r)?)
            }
            ComponentGeometry::Segment { p, q } => {
                let s = SegmentFrame::new(p, q, x);
                Ok(self.density / (4.0 * PI) * s.integral())
            }
        }
    }

    /// Gradient of [`Self::closed_form`] at `x`; trailing entries are zero in 2-D.
    pub fn closed_form_gradient(&self, x: &[f64]) -> Result<[f64; 3], PotentialError> {
        self.check_point(x)?;
        match &self.geometry {
            ComponentGeometry::Point(c) => {
                let d = sub(&pad(x), &pad(c));
                let r2 = dot(&d, &d);
                let f = match c.len() {
                    2 => -self.density / (2.0 * PI * r2),
                    _ => -self.density / (4.0 * PI * r2 * r2.sqrt()),
                };
                Ok(scale(&d, f))
            }
            ComponentGeometry::Segment { p, q } => {
                let s = SegmentFrame::new(p, q, x);
                Ok(scale(&s.gradient(), self.density / (4.0 * PI)))
            }
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<(), PotentialError> {
        if x.len() != self.dim() {
            return Err(PotentialError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if !(self.distance(x) > 0.0) {
            return Err(PotentialError::Domain(format!("point {x:?} lies on the singular set")));
        }
        Ok(())
    }
}

/// [`SingularComponent::closed_form`] as a free function.
pub fn potential_closed_form(comp: &SingularComponent, x: &[f64]) -> Result<f64, PotentialError> {
    comp.closed_form(x)
}

/// Coordinates of `x` relative to a segment: `x - p = t e + ρ n̂`.
struct SegmentFrame {
    len: f64,
    e: [f64; 3],
    t: f64,
    rho: f64,
    perp: [f64; 3],
    rp: f64,
    rq: f64,
}

impl SegmentFrame {
    fn new(p: &[f64; 3], q: &[f64; 3], x: &[f64]) -> Self {
        let d = sub(q, p);
        let len = norm(&d);
        let e = scale(&d, 1.0 / len);
        let xp = sub(&pad(x), p);
        let t = dot(&xp, &e);
        let perp = axpy(&xp, -t, &e);
        let rho = norm(&perp);
        SegmentFrame { len, e, t, rho, perp, rp: norm(&xp), rq: norm(&sub(&pad(x), q)) }
    }

    /// `∫_0^L ds / |x - p - s e|`, arranged to avoid cancellation on the axis.
    fn integral(&self) -> f64 {
        let (t, l) = (self.t, self.len);
        if t <= 0.0 {
            ((l - t + self.rq) / (-t + self.rp)).ln()
        } else if t >= l {
            ((t + self.rp) / (t - l + self.rq)).ln()
        } else {
            ((l - t + self.rq) * (t + self.rp) / (self.rho * self.rho)).ln()
        }
    }

    /// Gradient of [`Self::integral`] with respect to `x`.
    fn gradient(&self) -> [f64; 3] {
        let (t, l) = (self.t, self.len);
        let along = 1.0 / self.rp - 1.0 / self.rq;
        // Radial derivative divided by ρ: -((L - t)/r_q + t/r_p)/ρ², rewritten off the segment's span.
        let radial = if t >= l {
            -(1.0 / (self.rq * (self.rq + t - l)) - 1.0 / (self.rp * (self.rp + t)))
        } else if t <= 0.0 {
            -(1.0 / (self.rp * (self.rp - t)) - 1.0 / (self.rq * (self.rq + l - t)))
        } else {
            -((l - t) / self.rq + t / self.rp) / (self.rho * self.rho)
        };
        let mut g = scale(&self.e, along);
        for k in 0..3 {
            g[k] += radial * self.perp[k];
        }
        g
    }
}

fn segment_distance(p1: &[f64; 3], q1: &[f64; 3], p2: &[f64; 3], q2: &[f64; 3]) -> f64 {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let (a, e, f) = (dot(&d1, &d1), dot(&d2, &d2), dot(&d2, &r));
    let c = dot(&d1, &r);
    let b = dot(&d1, &d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-14 * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    norm(&sub(&axpy(p1, s, &d1), &axpy(p2, t, &d2)))
}

pub(crate) fn pad(x: &[f64]) -> [f64; 3] {
    let mut y = [0.0; 3];
    y[..x.len()].copy_from_slice(x);
    y
}

pub(crate) fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn scale(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn axpy(a: &[f64; 3], s: f64, d: &[f64; 3]) -> [f64; 3] {
    [a[0] + s * d[0], a[1] + s * d[1], a[2] + s * d[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn kernel_examples() {
        assert!((fundamental_solution(3, 1.0 / (4.0 * PI)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fundamental_solution(2, 1.0).unwrap(), 0.0);
        assert!(fundamental_solution(2, 0.0).is_err());
        assert!(fundamental_solution(3, -1.0).is_err());
        assert!(fundamental_solution(4, 1.0).is_err());
    }

    #[test]
    fn point_potential_examples() {
        let c = SingularComponent::point(&[0.0, 0.0, 0.0], 1.0, vec![]).unwrap();
        assert!((c.closed_form(&[1.0, 0.0, 0.0]).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert!(c.closed_form(&[0.0, 0.0, 0.0]).is_err());
        assert!(c.closed_form(&[1.0, 0.0]).is_err());
    }

    /// Composite Gauss–Legendre quadrature of the kernel along the segment.
    fn segment_quadrature(p: &[f64; 3], q: &[f64; 3], x: &[f64; 3]) -> (f64, [f64; 3]) {
        let (nodes, weights) = gauss_legendre(20);
        let d = sub(q, p);
        let len = norm(&d);
        let panels = 400;
        let (mut v, mut g) = (0.0, [0.0; 3]);
        for k in 0..panels {
            let (a, b) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
            for (s, w) in nodes.iter().zip(&weights) {
                let tt = 0.5 * (a + b) + 0.5 * (b - a) * s;
                let y = axpy(p, tt, &d);
                let r = sub(x, &y);
                let rn = norm(&r);
                let wt = w * 0.5 * (b - a) * len;
                v += wt / rn;
                for i in 0..3 {
                    g[i] -= wt * r[i] / (rn * rn * rn);
                }
            }
        }
        (v / (4.0 * PI), scale(&g, 1.0 / (4.0 * PI)))
    }

    #[test]
    fn segment_matches_quadrature() {
        let p = [0.0, 0.0, -0.5];
        let q = [0.0, 0.0, 0.5];
        let c = SingularComponent::segment(p, q, 1.0, vec![]).unwrap();
        for x in [[0.3, 0.0, 0.0], [0.1, 0.2, 0.4], [0.0, 0.05, 0.9], [0.2, -0.1, -0.7], [0.0, 0.0, 0.8]] {
            let (v, g) = segment_quadrature(&p, &q, &x);
            let got = c.closed_form(&x).unwrap();
            assert!((got - v).abs() < 1e-10, "{x:?}: {got} vs {v}");
            let gg = c.closed_form_gradient(&x).unwrap();
            for i in 0..3 {
                assert!((gg[i] - g[i]).abs() < 1e-9, "{x:?}: {gg:?} vs {g:?}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let comps = [
            SingularComponent::point(&[0.1, -0.2], 2.0, vec![]).unwrap(),
            SingularComponent::point(&[0.1, -0.2, 0.3], 0.5, vec![]).unwrap(),
            SingularComponent::segment([0.1, 0.0, 0.0], [0.4, 0.3, -0.2], 1.5, vec![]).unwrap(),
        ];
        let x = [0.45, 0.15, -0.3];
        let h = 1e-5;
        for c in &comps {
            let n = c.dim();
            let g = c.closed_form_gradient(&x[..n]).unwrap();
            for k in 0..n {
                let mut a = x;
                let mut b = x;
                a[k] += h;
                b[k] -= h;
                let fd = (c.closed_form(&a[..n]).unwrap() - c.closed_form(&b[..n]).unwrap()) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-7 * g[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn closed_forms_are_harmonic() {
        let comps = [
            SingularComponent::point(&[0.0, 0.0], 1.0, vec![]).unwrap(),
            SingularComponent::point(&[0.0, 0.0, 0.0], 1.0, vec![]).unwrap(),
            SingularComponent::segment([0.0, 0.0, -0.3], [0.0, 0.0, 0.3], 1.0, vec![]).unwrap(),
        ];
        let h = 1e-3;
        for c in &comps {
            let n = c.dim();
            for x in [[0.3, 0.2, 0.1], [-0.4, 0.1, 0.35], [0.05, -0.2, -0.1]] {
                let f0 = c.closed_form(&x[..n]).unwrap();
                let mut lap = 0.0;
                for k in 0..n {
                    let mut a = x;
                    let mut b = x;
                    a[k] += h;
                    b[k] -= h;
                    lap += c.closed_form(&a[..n]).unwrap() + c.closed_form(&b[..n]).unwrap() - 2.0 * f0;
                }
                // Stencil residual h²·Δ_h f against the 1e-6 budget.
                assert!(lap.abs() <= 1e-6, "{lap}");
            }
        }
    }

    #[test]
    fn distances() {
        let s = SingularComponent::segment([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0, vec![]).unwrap();
        assert!((s.distance(&[0.5, 0.3, 0.4]) - 0.5).abs() < 1e-15);
        assert!((s.distance(&[2.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((s.distance_max_norm(&[0.5, 0.3, 0.4]) - 0.4).abs() < 1e-12);
        assert!((s.distance_max_norm(&[1.5, 0.2, 0.0]) - 0.5).abs() < 1e-12);
        let t = SingularComponent::segment([0.5, 1.0, -1.0], [0.5, 1.0, 1.0], 1.0, vec![]).unwrap();
        assert!((s.separation(&t) - 1.0).abs() < 1e-14);
        let pnt = SingularComponent::point(&[0.5, 0.0, 2.0], 1.0, vec![]).unwrap();
        assert!((pnt.separation(&s) - 2.0).abs() < 1e-14);
        assert!((s.separation(&pnt) - 2.0).abs() < 1e-14);
        assert!((s.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_components() {
        assert!(SingularComponent::point(&[0.0], 1.0, vec![]).is_err());
        assert!(SingularComponent::point(&[0.0, 0.0], 0.0, vec![]).is_err());
        assert!(SingularComponent::segment([0.0; 3], [0.0; 3], 1.0, vec![]).is_err());
    }
}
