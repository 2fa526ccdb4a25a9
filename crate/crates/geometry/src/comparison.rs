//! Quantitative comparison of the forms `Q_p` at nearby points.

use nalgebra::DMatrix;

use crate::metric::metric_tensor;
use crate::model::HoroPoint;
use crate::params::ModelParams;
use crate::GeometryError;

/// Explicit equivalence constant for points within distance `r` of a
/// geodesic asymptotic to `γ(-∞)`: `c = e^{4r} max{2, 4C² + 1}`, `C = 2 sinh r`.
///
/// `C` bounds `e^{t}|v_hor - w_hor|` for points at distance `2r` on a common
/// horosphere, obtained by projecting to the real hyperbolic factor.
pub fn form_equivalence_constant(r: f64) -> f64 {
    let c = 2.0 * r.sinh();
    (4.0 * r).exp() * f64::max(2.0, 4.0 * c * c + 1.0)
}

/// Extreme values of `Q_p(ξ) / Q_q(ξ)` over `ξ ≠ 0` (generalized eigenvalues).
pub fn form_ratio_bounds(params: &ModelParams, p: &HoroPoint, q: &HoroPoint) -> Result<(f64, f64), GeometryError> {
    let n = params.vdim();
    let qp = q_block(params, p)?;
    let qq = q_block(params, q)?;
    let chol = qq.cholesky().ok_or(GeometryError::NonFinite)?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(GeometryError::NonFinite)?;
    let m = &linv * qp * linv.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    debug_assert_eq!(eig.len(), n);
    Ok((lo, hi))
}

fn q_block(params: &ModelParams, p: &HoroPoint) -> Result<DMatrix<f64>, GeometryError> {
    let g = metric_tensor(params, p)?;
    let n = params.vdim();
    Ok(g.view((1, 1), (n, n)).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::q_form;
    use crate::params::Family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_values() {
        assert_eq!(form_equivalence_constant(0.0), 2.0);
        let r = 1.0f64;
        let c = 2.0 * r.sinh();
        assert!((form_equivalence_constant(r) - (4.0f64).exp() * (4.0 * c * c + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn bounds_bracket_random_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for fam in Family::ALL {
            let par = ModelParams::new(fam, 2).unwrap();
            let p = HoroPoint::new(0.4, (0..par.vdim()).map(|_| rng.random_range(-1.0..1.0)).collect());
            let q = HoroPoint::new(-0.2, (0..par.vdim()).map(|_| rng.random_range(-1.0..1.0)).collect());
            let (lo, hi) = form_ratio_bounds(&par, &p, &q).unwrap();
            assert!(lo > 0.0 && lo <= hi);
            for _ in 0..200 {
                let xi: Vec<f64> = (0..par.vdim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let ratio = q_form(&par, &p, &xi).unwrap() / q_form(&par, &q, &xi).unwrap();
                assert!(ratio >= lo * (1.0 - 1e-10) && ratio <= hi * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn real_family_ratio_is_exponential_in_height() {
        let par = ModelParams::new(Family::R, 3).unwrap();
        let p = HoroPoint::new(0.5, vec![3.0, -1.0]);
        let q = HoroPoint::new(0.0, vec![0.0, 0.0]);
        let (lo, hi) = form_ratio_bounds(&par, &p, &q).unwrap();
        assert!((lo - 1f64.exp()).abs() < 1e-12 && (hi - 1f64.exp()).abs() < 1e-12);
    }
}
