//! One-shot geometry queries printed with 15 significant digits.

use horomap_geometry::{busemann_minus, busemann_plus, dist, geodesic_ode, normalize_direction, GeometryError, HoroPoint, ModelParams};

/// Formats like C's `%.15g`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.14e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    trim_zeros(&format!("{:.*}", (14 - exp) as usize, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn point(params: &ModelParams, c: &[f64]) -> Result<HoroPoint, GeometryError> {
    HoroPoint::from_coords(params, c)
}

/// `dist(p, q)`.
pub fn query_dist(params: &ModelParams, p: &[f64], q: &[f64]) -> Result<String, GeometryError> {
    Ok(fmt_g(dist(params, &point(params, p)?, &point(params, q)?)?))
}

/// `f_γ(p)`, or `f_{-γ}(p)` when `minus` is set.
pub fn query_busemann(params: &ModelParams, p: &[f64], minus: bool) -> Result<String, GeometryError> {
    let p = point(params, p)?;
    Ok(fmt_g(if minus { busemann_minus(params, &p) } else { busemann_plus(params, &p) }))
}

/// Endpoint of the geodesic leaving `p` along `dir` (rescaled to unit speed) for time `t`,
/// followed by its distance from `p`.
pub fn query_geodesic(params: &ModelParams, p: &[f64], dir: &[f64], t: f64) -> Result<String, GeometryError> {
    let p = point(params, p)?;
    if dir.len() != params.m {
        return Err(GeometryError::DimensionMismatch { expected: params.m, got: dir.len() });
    }
    if !t.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    let unit = normalize_direction(params, &p, dir)?;
    let q = geodesic_ode(params, &p, &unit, t)?;
    let coords: Vec<String> = q.coords().iter().map(|c| fmt_g(*c)).collect();
    Ok(format!("{}\ndist {}", coords.join(" "), fmt_g(dist(params, &p, &q)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use horomap_geometry::Family;

    #[test]
    fn formats_like_percent_g() {
        assert_eq!(fmt_g(std::f64::consts::LN_2), "0.693147180559945");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(1e20), "1e+20");
        assert_eq!(fmt_g(1.234e-7), "1.234e-07");
        assert_eq!(fmt_g(123456.0), "123456");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(1e15), "1e+15");
        assert_eq!(fmt_g(0.0), "0");
    }

    #[test]
    fn queries() {
        let r = ModelParams::new(Family::R, 2).unwrap();
        assert_eq!(query_busemann(&r, &[0.0, 1.0], false).unwrap(), fmt_g(2f64.ln()));
        assert_eq!(query_busemann(&r, &[0.3, 1.0], true).unwrap(), "0.3");
        assert_eq!(query_dist(&r, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), "0");
        assert!(query_dist(&r, &[0.0], &[0.0, 0.0]).is_err());
        let c = ModelParams::new(Family::C, 2).unwrap();
        let out = query_geodesic(&c, &[0.1, 0.0, 0.2, -0.1], &[1.0, 1.0, 0.0, 0.5], 1.5).unwrap();
        let dist_line = out.lines().nth(1).unwrap();
        let d: f64 = dist_line.strip_prefix("dist ").unwrap().parse().unwrap();
        assert!((d - 1.5).abs() < 1e-6);
        assert!(query_geodesic(&c, &[0.0; 4], &[0.0; 4], 1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn printed_values_keep_fifteen_digits(m in -1.0f64..1.0, e in -30i32..30) {
            let x = m * 10f64.powi(e);
            let back: f64 = fmt_g(x).parse().unwrap();
            proptest::prop_assert!((back - x).abs() <= 1e-14 * x.abs());
            proptest::prop_assert!(fmt_g(x).len() <= 22);
        }
    }
}
