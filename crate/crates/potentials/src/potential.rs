//! Singular potentials `u_i = μ_i * Γ + u'_i` vanishing on the box boundary,
//! their charges and shell integrals.

use std::io::Write;

use crate::kernel::{dot, SingularComponent};
use crate::laplace::{harmonic_extension, CgReport};
use crate::lattice::Lattice;
use crate::quadrature::shell_samples;
use crate::PotentialError;

/// Harmonic correction stored on a lattice, with its central-difference gradient.
#[derive(Clone, Debug)]
struct Correction {
    lattice: Lattice,
    values: Vec<f64>,
    gradient: Vec<Vec<f64>>,
    report: CgReport,
}

/// A singular potential: the free-space part in closed form plus an optional
/// discrete-harmonic correction that cancels it on the boundary of the box.
#[derive(Clone, Debug)]
pub struct SingularPotential {
    component: SingularComponent,
    correction: Option<Correction>,
}

impl SingularPotential {
    /// The free-space potential `μ * Γ` with no boundary correction.
    pub fn free(component: SingularComponent) -> Self {
        SingularPotential { component, correction: None }
    }

    pub fn component(&self) -> &SingularComponent {
        &self.component
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.correction.as_ref().map(|c| &c.lattice)
    }

    /// Nodal values of the correction `u'_i`, if any.
    pub fn correction(&self) -> Option<&[f64]> {
        self.correction.as_ref().map(|c| c.values.as_slice())
    }

    pub fn correction_report(&self) -> Option<CgReport> {
        self.correction.as_ref().map(|c| c.report)
    }

    /// `u_i(x)`; the correction is interpolated multilinearly between nodes.
    pub fn value(&self, x: &[f64]) -> Result<f64, PotentialError> {
        let mut v = self.component.closed_form(x)?;
        if let Some(c) = &self.correction {
            v += c.lattice.interpolate(&c.values, x);
        }
        Ok(v)
    }

    /// `∇u_i(x)`, with the correction gradient from interpolated central differences.
    pub fn gradient(&self, x: &[f64]) -> Result<[f64; 3], PotentialError> {
        let mut g = self.component.closed_form_gradient(x)?;
        if let Some(c) = &self.correction {
            for (k, gk) in c.gradient.iter().enumerate() {
                g[k] += c.lattice.interpolate(gk, x);
            }
        }
        Ok(g)
    }

    /// Values of `u_i` at the lattice nodes, `+∞` at nodes lying on `Σ_i`.
    pub fn nodal_values(&self, lattice: &Lattice) -> Vec<f64> {
        let n = lattice.dim();
        (0..lattice.len())
            .map(|i| {
                let x = lattice.point(i);
                match self.component.closed_form(&x[..n]) {
                    Ok(v) => v + self.correction.as_ref().map_or(0.0, |c| c.values[i]),
                    Err(_) => f64::INFINITY,
                }
            })
            .collect()
    }

    /// The charge `e = -∫_{∂^s} ∂_n u` with `n` pointing away from `Σ_i`.
    ///
    /// The closed-form part is integrated over the shell; the flux of the
    /// correction is taken through the lattice surface enclosing the shell,
    /// where the discrete divergence theorem is exact.
    pub fn charge(&self, s: f64) -> Result<f64, PotentialError> {
        self.check_shell(s)?;
        let n = self.component.dim();
        let mut flux = 0.0;
        for q in shell_samples(&self.component, s) {
            let g = self.component.closed_form_gradient(&q.x[..n])?;
            flux -= q.weight * dot(&g, &q.normal);
        }
        if let Some(c) = &self.correction {
            let l = &c.lattice;
            let mut acc = 0.0;
            for i in 0..l.len() {
                let x = l.point(i);
                if self.component.distance(&x[..n]) < s {
                    acc += l.neighbors(i).map(|j| c.values[j] - c.values[i]).sum::<f64>();
                }
            }
            flux -= acc * l.h().powi(n as i32 - 2);
        }
        Ok(flux)
    }

    /// `∫_{∂^s} u dS` by surface quadrature.
    pub fn shell_integral(&self, s: f64) -> Result<f64, PotentialError> {
        self.check_shell(s)?;
        let n = self.component.dim();
        let mut acc = 0.0;
        for q in shell_samples(&self.component, s) {
            acc += q.weight * self.value(&q.x[..n])?;
        }
        Ok(acc)
    }

    /// `min ‖∇u‖² dist(x, Σ)²` over the shells of the given radii.
    pub fn min_scaled_gradient(&self, radii: &[f64]) -> Result<f64, PotentialError> {
        let n = self.component.dim();
        let mut best = f64::INFINITY;
        for &s in radii {
            self.check_shell(s)?;
            for q in shell_samples(&self.component, s) {
                let g = self.gradient(&q.x[..n])?;
                best = best.min(dot(&g, &g) * s * s);
            }
        }
        Ok(best)
    }

    fn check_shell(&self, s: f64) -> Result<(), PotentialError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(PotentialError::Domain(format!("shell radius must be positive, got {s}")));
        }
        if let Some(c) = &self.correction {
            let room = boundary_distance(&self.component, &c.lattice);
            if s + c.lattice.h() >= room {
                return Err(PotentialError::ShellOutsideDomain { radius: s, room });
            }
        }
        Ok(())
    }
}

/// Distance from the support of `comp` to the boundary of the lattice box.
pub fn boundary_distance(comp: &SingularComponent, lattice: &Lattice) -> f64 {
    use crate::kernel::ComponentGeometry::*;
    match &comp.geometry {
        Point(x) => lattice.distance_to_boundary(x),
        // Distance to the box boundary is concave, so the minimum sits at an endpoint.
        Segment { p, q } => lattice.distance_to_boundary(p).min(lattice.distance_to_boundary(q)),
    }
}

/// Adds the discrete-harmonic function with boundary values `-μ * Γ`, so that the
/// corrected potential vanishes on the boundary of the box.
pub fn boundary_correction(component: &SingularComponent, lattice: &Lattice) -> Result<SingularPotential, PotentialError> {
    let n = lattice.dim();
    if component.dim() != n {
        return Err(PotentialError::DimensionMismatch { expected: n, got: component.dim() });
    }
    let inside = (0..n).all(|k| {
        let c = component.closest_point(lattice.lo());
        c[k] > lattice.lo()[k] && c[k] < lattice.hi()[k]
    });
    if !inside || !(boundary_distance(component, lattice) > 0.0) {
        return Err(PotentialError::Configuration("singular component must lie in the open box".into()));
    }
    let mut values = vec![0.0; lattice.len()];
    for (i, v) in values.iter_mut().enumerate() {
        if lattice.is_boundary(i) {
            *v = -component.closed_form(&lattice.point(i)[..n])?;
        }
    }
    let report = harmonic_extension(lattice, &mut values)?;
    let gradient = (0..n).map(|k| central_difference(lattice, &values, k)).collect();
    Ok(SingularPotential {
        component: component.clone(),
        correction: Some(Correction { lattice: lattice.clone(), values, gradient, report }),
    })
}

fn central_difference(lattice: &Lattice, values: &[f64], axis: usize) -> Vec<f64> {
    let s = lattice.strides()[axis];
    let last = lattice.shape()[axis] - 1;
    let h = lattice.h();
    (0..lattice.len())
        .map(|i| {
            let m = lattice.multi(i)[axis];
            if m == 0 {
                (values[i + s] - values[i]) / h
            } else if m == last {
                (values[i] - values[i - s]) / h
            } else {
                (values[i + s] - values[i - s]) / (2.0 * h)
            }
        })
        .collect()
}

/// Free-function form of [`SingularPotential::charge`].
pub fn charge(pot: &SingularPotential, s: f64) -> Result<f64, PotentialError> {
    pot.charge(s)
}

/// Free-function form of [`SingularPotential::shell_integral`].
pub fn shell_integral(pot: &SingularPotential, s: f64) -> Result<f64, PotentialError> {
    pot.shell_integral(s)
}

/// The total potential `u_0 = Σ u_i` and its components.
#[derive(Clone, Debug)]
pub struct MultiPotential {
    pub lattice: Lattice,
    pub potentials: Vec<SingularPotential>,
    /// Nodal values of each `u_i` (`+∞` on `Σ_i`).
    pub nodal: Vec<Vec<f64>>,
    /// Nodal values of `u_0`.
    pub u0: Vec<f64>,
}

/// Builds every corrected potential and sums them nodewise.
pub fn multi_potential(components: &[SingularComponent], lattice: &Lattice) -> Result<MultiPotential, PotentialError> {
    for (i, a) in components.iter().enumerate() {
        for (j, b) in components.iter().enumerate().skip(i + 1) {
            if !(a.separation(b) > 0.0) {
                return Err(PotentialError::Configuration(format!("components {i} and {j} overlap")));
            }
        }
    }
    let potentials = components
        .iter()
        .map(|c| boundary_correction(c, lattice))
        .collect::<Result<Vec<_>, _>>()?;
    let nodal: Vec<Vec<f64>> = potentials.iter().map(|p| p.nodal_values(lattice)).collect();
    let mut u0 = vec![0.0; lattice.len()];
    for col in &nodal {
        for (a, b) in u0.iter_mut().zip(col) {
            *a += b;
        }
    }
    Ok(MultiPotential { lattice: lattice.clone(), potentials, nodal, u0 })
}

impl MultiPotential {
    /// Writes one row per node: index, coordinates, `u0`, then each `u_i`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PotentialError> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.lattice.dim();
        let mut header = vec!["index".to_string()];
        header.extend((0..n).map(|k| format!("x{k}")));
        header.push("u0".into());
        header.extend((1..=self.nodal.len()).map(|k| format!("u{k}")));
        w.write_record(&header)?;
        for i in 0..self.lattice.len() {
            let x = self.lattice.point(i);
            let mut row = vec![i.to_string()];
            row.extend(x[..n].iter().map(|v| format!("{v:?}")));
            row.push(format!("{:?}", self.u0[i]));
            row.extend(self.nodal.iter().map(|c| format!("{:?}", c[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::discrete_laplacian;
    use std::f64::consts::PI;

    fn box2(h: f64) -> Lattice {
        Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], h).unwrap()
    }

    #[test]
    fn corrected_potential_vanishes_on_boundary_and_is_positive() {
        let l = box2(1.0 / 16.0);
        let c = SingularComponent::point(&[0.0, 0.0], 1.0, vec![0.0]).unwrap();
        let pot = boundary_correction(&c, &l).unwrap();
        let vals = pot.nodal_values(&l);
        for i in 0..l.len() {
            if l.is_boundary(i) {
                assert!(vals[i].abs() < 1e-14);
            } else {
                assert!(vals[i] > 0.0);
            }
        }
    }

    #[test]
    fn symmetric_under_box_symmetries() {
        let l = box2(1.0 / 16.0);
        let c = SingularComponent::point(&[0.0, 0.0], 1.0, vec![0.0]).unwrap();
        let pot = boundary_correction(&c, &l).unwrap();
        let corr = pot.correction().unwrap();
        let s = l.shape()[0];
        for a in 0..s {
            for b in 0..s {
                let v = corr[l.index(&[a, b])];
                for (p, q) in [(b, a), (s - 1 - a, b), (a, s - 1 - b)] {
                    assert!((v - corr[l.index(&[p, q])]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn correction_is_discrete_harmonic() {
        let l = Lattice::new(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0], 0.125).unwrap();
        let c = SingularComponent::segment([-0.25, 0.0, 0.0], [0.25, 0.0, 0.0], 2.0, vec![]).unwrap();
        let pot = boundary_correction(&c, &l).unwrap();
        let corr = pot.correction().unwrap();
        for i in (0..l.len()).filter(|&i| !l.is_boundary(i)) {
            assert!(discrete_laplacian(&l, corr, i).abs() * l.h() * l.h() < 1e-10);
        }
    }

    #[test]
    fn charges_of_free_potentials() {
        let p3 = SingularPotential::free(SingularComponent::point(&[0.0, 0.0, 0.0], 1.0, vec![]).unwrap());
        for s in [0.05, 0.1, 0.2] {
            assert!((p3.charge(s).unwrap() - 1.0).abs() < 1e-6);
        }
        let seg = SingularPotential::free(SingularComponent::segment([0.0; 3], [0.0, 0.3, 0.4], 1.5, vec![]).unwrap());
        for s in [0.05, 0.1] {
            assert!((seg.charge(s).unwrap() - 0.75).abs() < 1e-6);
        }
        let p2 = SingularPotential::free(SingularComponent::point(&[0.0, 0.0], 2.0, vec![]).unwrap());
        assert!((p2.charge(0.3).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shell_integrals_of_free_potentials() {
        let p3 = SingularPotential::free(SingularComponent::point(&[0.0, 0.0, 0.0], 1.0, vec![]).unwrap());
        for s in [0.05, 0.1, 0.4] {
            assert!((p3.shell_integral(s).unwrap() - s).abs() < 1e-12);
        }
        let p2 = SingularPotential::free(SingularComponent::point(&[0.0, 0.0], 1.0, vec![]).unwrap());
        let s = 0.01f64;
        assert!((p2.shell_integral(s).unwrap() - (-s * s.ln())).abs() < 1e-12);
    }

    #[test]
    fn corrected_charge_is_shell_independent() {
        let l = box2(1.0 / 32.0);
        let c = SingularComponent::point(&[0.0, 0.0], 1.0, vec![0.0]).unwrap();
        let pot = boundary_correction(&c, &l).unwrap();
        let e: Vec<f64> = [0.1, 0.2, 0.4].iter().map(|&s| pot.charge(s).unwrap()).collect();
        for v in &e {
            assert!((v - 1.0).abs() < 1e-6);
        }
        assert!((e[0] - e[2]).abs() <= 1e-8);
        assert!(pot.charge(0.99).is_err());
    }

    #[test]
    fn gradient_lower_bound_near_point() {
        let h = 1.0 / 32.0;
        let l = box2(h);
        let c = SingularComponent::point(&[0.0, 0.0], 1.0, vec![0.0]).unwrap();
        let pot = boundary_correction(&c, &l).unwrap();
        let radii: Vec<f64> = (2..=10).map(|k| k as f64 * h).collect();
        let m = pot.min_scaled_gradient(&radii).unwrap();
        // ‖∇Γ‖² r² = (2π)⁻², reduced slightly by the smooth correction.
        assert!(m > 0.5 / (4.0 * PI * PI), "{m}");
    }

    #[test]
    fn multi_potential_sums_and_rejects_overlap() {
        let l = box2(1.0 / 16.0);
        let a = SingularComponent::point(&[-0.5, 0.0], 1.0, vec![0.0]).unwrap();
        let b = SingularComponent::point(&[0.5, 0.0], 1.0, vec![1.0]).unwrap();
        let mp = multi_potential(&[a.clone(), b.clone()], &l).unwrap();
        for i in 0..l.len() {
            if mp.u0[i].is_finite() {
                assert!((mp.u0[i] - mp.nodal[0][i] - mp.nodal[1][i]).abs() < 1e-14);
            }
            // Mirror symmetry x ↦ -x swaps the two components.
            let m = l.multi(i);
            let j = l.index(&[l.shape()[0] - 1 - m[0], m[1]]);
            if mp.u0[i].is_finite() {
                assert!((mp.u0[i] - mp.u0[j]).abs() < 1e-10);
            }
        }
        assert!(multi_potential(&[a.clone(), a], &l).is_err());
        let mut buf = Vec::new();
        mp.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,x0,x1,u0,u1,u2\n"));
        assert_eq!(text.lines().count(), l.len() + 1);
    }
}
