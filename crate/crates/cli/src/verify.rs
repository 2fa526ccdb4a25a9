//! Randomized certification of the inequalities the solver relies on.
//!
//! Every check draws its samples from a ChaCha stream derived from the seed
//! and the check's position in [`CHECKS`], so a table is reproducible bit for
//! bit. A check records one margin per tested condition, `allowed - observed`,
//! and passes when no margin is negative (or, for strict inequalities, when
//! every margin is positive).

use std::f64::consts::{LN_2, PI};

use horomap_energy::{
    build_grid, dirichlet_energy, log_cutoff, poincare_check, smoothstep_down, BoundaryData, Energy,
    NodeKind,
};
use horomap_geometry::comparison::{form_equivalence_constant, form_ratio_bounds};
use horomap_geometry::{
    busemann_plus, covector_norm_sqr, dilation_tau, dist, geodesic_ode, horo_to_disk, metric_tensor, n_translation,
    normalize_direction, q_form, transvection_to_origin, vector_norm_sqr, Family, GeometryError, HoroPoint, Isometry,
    ModelParams, Quaternion,
};
use horomap_potentials::{boundary_correction, boundary_distance, multi_potential, Lattice, PotentialError, SingularComponent};
use horomap_solver::{setup, truncate_u, truncate_ubar, Problem, SolverError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown check `{0}` (available: all, {1})")]
    UnknownCheck(String, String),
    #[error("sample count must be positive")]
    NoSamples,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Energy(#[from] horomap_energy::EnergyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Sampling budget and seed shared by all checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Samples per family for the pointwise geometry checks; the grid-based
    /// checks cap this at a fixed count.
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 1, samples: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub passed: bool,
    /// Number of tested conditions.
    pub samples: usize,
    /// Smallest `allowed - observed` over all conditions.
    pub worst_margin: f64,
}

struct Check {
    id: &'static str,
    about: &'static str,
    run: fn(&Ctx) -> Result<Tally, VerifyError>,
}

/// Every available check, in table order.
const CHECKS: &[Check] = &[
    Check { id: "busemann-gradient", about: "|grad f| = 1 +- 1e-6", run: busemann_gradient },
    Check { id: "lemma2.1", about: "Jacobi growth between e^{2a dt} and e^{2b dt}", run: jacobi_growth },
    Check { id: "lemma2.2", about: "asymptotic geodesics converge like e^t", run: asymptotic_decay },
    Check { id: "lemma2.3", about: "horoball intersection within T + log 2", run: horoball_containment },
    Check { id: "lemma2.4", about: "Busemann difference monotone, sum tends to 0", run: busemann_limits },
    Check { id: "lemma2.5", about: "Busemann gradients at positive angle", run: gradient_positivity },
    Check { id: "lemma2.6-i", about: "Q_p / Q_q within [1/c(R), c(R)]", run: form_equivalence },
    Check { id: "lemma2.6-ii", about: "horoballs star-shaped in v", run: star_shaped },
    Check { id: "appendix-metric", about: "metric equals the pulled-back ball metric", run: metric_pullback },
    Check { id: "distance-ode", about: "closed-form distance equals geodesic arclength", run: distance_ode },
    Check { id: "isometry", about: "N, dilations, transvections and the swap preserve dist", run: isometries },
    Check { id: "lemma2.7", about: "unit charges, shrinking shell integrals", run: charges_and_shells },
    Check { id: "lemma2.8", about: "log cutoff energy ~ 2 pi / |log eps|", run: log_cutoff_energy },
    Check { id: "lemma3.2", about: "weighted Poincare inequality", run: weighted_poincare },
    Check { id: "lemma3.3", about: "edge forms within c(R) of the model map", run: edge_form_equivalence },
    Check { id: "lemma3.5", about: "truncations never raise F", run: truncation_monotone },
];

pub fn check_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.id).collect()
}

/// Resolves a selection (`all` or check ids) to table positions, rejecting unknown ids.
pub fn select(ids: &[String]) -> Result<Vec<usize>, VerifyError> {
    if ids.is_empty() || ids.iter().any(|s| s == "all") {
        return Ok((0..CHECKS.len()).collect());
    }
    let mut out = Vec::new();
    for id in ids {
        let k = CHECKS
            .iter()
            .position(|c| c.id == id)
            .ok_or_else(|| VerifyError::UnknownCheck(id.clone(), check_ids().join(", ")))?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

pub fn run_checks(ids: &[String], opts: VerifyOptions) -> Result<Vec<CheckOutcome>, VerifyError> {
    if opts.samples == 0 {
        return Err(VerifyError::NoSamples);
    }
    select(ids)?
        .into_iter()
        .map(|k| {
            let cx = Ctx { seed: opts.seed, samples: opts.samples, index: k };
            Ok((CHECKS[k].run)(&cx)?.finish(CHECKS[k].id))
        })
        .collect()
}

/// Fixed-width table, one line per check.
pub fn format_table(rows: &[CheckOutcome]) -> String {
    let mut s = format!("{:<18} {:<6} {:>8} {:>14}  {}\n", "check", "result", "samples", "worst_margin", "property");
    for r in rows {
        let about = CHECKS.iter().find(|c| c.id == r.id).map_or("", |c| c.about);
        s.push_str(&format!(
            "{:<18} {:<6} {:>8} {:>14.6e}  {}\n",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.samples,
            r.worst_margin,
            about
        ));
    }
    s
}

struct Ctx {
    seed: u64,
    samples: usize,
    index: usize,
}

impl Ctx {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let s = self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((self.index as u64) << 40) ^ stream;
        ChaCha8Rng::seed_from_u64(s)
    }
}

struct Tally {
    samples: usize,
    worst: f64,
    failed: bool,
}

impl Tally {
    fn new() -> Self {
        Tally { samples: 0, worst: f64::INFINITY, failed: false }
    }

    fn record(&mut self, margin: f64) {
        self.samples += 1;
        self.worst = self.worst.min(margin);
        self.failed |= !(margin >= 0.0);
    }

    fn record_strict(&mut self, margin: f64) {
        self.samples += 1;
        self.worst = self.worst.min(margin);
        self.failed |= !(margin > 0.0);
    }

    fn finish(self, id: &'static str) -> CheckOutcome {
        CheckOutcome { id, passed: !self.failed && self.samples > 0, samples: self.samples, worst_margin: self.worst }
    }
}

/// Ranks 2 and 3 alternate between samples.
fn model(fam: Family, k: usize) -> ModelParams {
    ModelParams::new(fam, 2 + k % 2).expect("ranks 2 and 3 are valid")
}

fn uniform(rng: &mut ChaCha8Rng, a: f64, b: f64) -> f64 {
    rng.random_range(a..b)
}

fn cube(rng: &mut ChaCha8Rng, n: usize, a: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-a..a)).collect()
}

/// A vector of the cube with norm at least `0.05 a`.
fn nonzero(rng: &mut ChaCha8Rng, n: usize, a: f64) -> Vec<f64> {
    loop {
        let v = cube(rng, n, a);
        if v.iter().map(|x| x * x).sum::<f64>().sqrt() >= 0.05 * a {
            return v;
        }
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// Largest `s ≥ 0` found by bisection with `g(s) ≤ target`, for `g(0) ≤ target`
/// and `g` eventually exceeding the target.
fn bisect_level(g: impl Fn(f64) -> f64, target: f64) -> f64 {
    let mut hi = 1.0;
    while g(hi) <= target && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Central differences with steps of metric length `step` along each coordinate.
fn fd_gradient(
    par: &ModelParams,
    p: &HoroPoint,
    step: f64,
    fourth_order: bool,
    f: impl Fn(&HoroPoint) -> f64,
) -> Result<Vec<f64>, VerifyError> {
    let c = p.coords();
    let mut grad = vec![0.0; par.m];
    for k in 0..par.m {
        let mut e = vec![0.0; par.m];
        e[k] = 1.0;
        let h = step / vector_norm_sqr(par, p, &e)?.sqrt();
        let at = |s: f64| {
            let mut x = c.clone();
            x[k] += s * h;
            f(&HoroPoint::new(x[0], x[1..].to_vec()))
        };
        grad[k] = if fourth_order {
            (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
        } else {
            (at(1.0) - at(-1.0)) / (2.0 * h)
        };
    }
    Ok(grad)
}

fn busemann_gradient(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let p = HoroPoint::new(uniform(&mut rng, -2.0, 2.0), cube(&mut rng, par.vdim(), 1.5));
            let grad = fd_gradient(&par, &p, 1e-3, true, |q| busemann_plus(&par, q))?;
            let norm = covector_norm_sqr(&par, &p, &grad)?.sqrt();
            t.record(1e-6 - (norm - 1.0).abs());
        }
    }
    Ok(t)
}

fn jacobi_growth(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let v = cube(&mut rng, par.vdim(), 2.0);
            let xi = nonzero(&mut rng, par.vdim(), 1.0);
            let s = uniform(&mut rng, -4.0, 4.0);
            let dt = 3.0 * (1.0 - rng.random::<f64>());
            let chi = |x: f64| q_form(&par, &HoroPoint::new(x, v.clone()), &xi);
            let ratio = chi(s + dt)? / chi(s)?;
            let lo = (2.0 * par.a() * dt).exp();
            let hi = (2.0 * par.b() * dt).exp();
            if fam == Family::R {
                t.record(1e-10 - (ratio / lo - 1.0).abs());
            } else {
                t.record(1e-12 - f64::max(1.0 - ratio / lo, ratio / hi - 1.0));
            }
        }
    }
    Ok(t)
}

fn asymptotic_decay(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let v = nonzero(&mut rng, par.vdim(), 2.0);
            let time = -20.0 * rng.random::<f64>();
            let d = dist(&par, &HoroPoint::new(time, vec![0.0; par.vdim()]), &HoroPoint::new(time, v.clone()))?;
            // Length of the straight horizontal segment at height 0, scaled by e^t.
            let bound = time.exp() * q_form(&par, &HoroPoint::origin(&par), &v)?.sqrt();
            t.record(1e-12 - (d / bound - 1.0));
        }
    }
    Ok(t)
}

fn horoball_containment(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let level = 5.0 * rng.random::<f64>();
            let t0 = uniform(&mut rng, -3.0, 3.0);
            // f_{-γ} = u ≤ t0 + T, and f_γ ≤ -t0 + T forces u ≥ t0 - T.
            let u = t0 - level + 2.0 * level * rng.random::<f64>();
            let dir = nonzero(&mut rng, par.vdim(), 1.0);
            let cap = -t0 + level;
            let smax = bisect_level(|s| busemann_plus(&par, &HoroPoint::new(u, scaled(&dir, s))), cap);
            let s = if k % 2 == 0 { smax } else { smax * rng.random::<f64>() };
            let p = HoroPoint::new(u, scaled(&dir, s));
            let d = dist(&par, &p, &HoroPoint::new(t0, vec![0.0; par.vdim()]))?;
            t.record(level + LN_2 / par.a() + 1e-9 - d);
        }
    }
    Ok(t)
}

fn busemann_limits(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    let steps = 200;
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let v = nonzero(&mut rng, par.vdim(), 2.0);
            let s = par.vert_dim();
            let nv: f64 = v[..s].iter().map(|x| x * x).sum();
            let nh: f64 = v[s..].iter().map(|x| x * x).sum();
            let limit = -0.5 * (nh * nh + 4.0 * nv).ln();
            let mut min_step = f64::INFINITY;
            let mut min_sum = f64::INFINITY;
            let mut prev: Option<f64> = None;
            let (mut first_sum, mut last_diff) = (0.0, 0.0);
            for j in 0..=steps {
                let time = -20.0 + 40.0 * j as f64 / steps as f64;
                let ubar = busemann_plus(&par, &HoroPoint::new(time, v.clone()));
                let (diff, sum) = (time - ubar, time + ubar);
                if let Some(p) = prev {
                    min_step = min_step.min(diff - p);
                }
                if j == 0 {
                    first_sum = sum;
                }
                min_sum = min_sum.min(sum);
                prev = Some(diff);
                last_diff = diff;
            }
            t.record(min_step + 1e-12);
            t.record(min_sum + 1e-12);
            t.record(1e-8 - first_sum.abs());
            t.record(1e-8 - (last_diff - limit).abs());
        }
    }
    Ok(t)
}

/// `g(a, b)` for covectors, by polarization.
fn covector_inner(par: &ModelParams, p: &HoroPoint, a: &[f64], b: &[f64]) -> Result<f64, VerifyError> {
    let plus: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let minus: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(0.25 * (covector_norm_sqr(par, p, &plus)? - covector_norm_sqr(par, p, &minus)?))
}

fn gradient_positivity(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let level = 0.5 * LN_2 + 3.5 * rng.random::<f64>();
            let t0 = uniform(&mut rng, -3.0, 3.0);
            let u = t0 + level + 4.0 * (1.0 - rng.random::<f64>());
            let dir = nonzero(&mut rng, par.vdim(), 1.0);
            let cap = -t0 + level;
            let s = bisect_level(|s| busemann_plus(&par, &HoroPoint::new(u, scaled(&dir, s))), cap);
            let p = HoroPoint::new(u, scaled(&dir, s));
            let gp = fd_gradient(&par, &p, 1e-5, false, |q| busemann_plus(&par, q))?;
            let gm = fd_gradient(&par, &p, 1e-5, false, |q| q.u)?;
            let inner = covector_inner(&par, &p, &gp, &gm)?;
            let norms = (covector_norm_sqr(&par, &p, &gp)? * covector_norm_sqr(&par, &p, &gm)?).sqrt();
            t.record_strict(inner / norms);
        }
    }
    Ok(t)
}

fn form_equivalence(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let t0 = 3.0 * rng.random::<f64>();
            let radius = uniform(&mut rng, 0.1, 2.0);
            let q = HoroPoint::new(t0, cube(&mut rng, par.vdim(), 1.0));
            let delta = nonzero(&mut rng, par.m, 1.0);
            let target = if k % 2 == 0 { radius } else { radius * rng.random::<f64>() };
            let shift = |l: f64| HoroPoint::new(q.u + l * delta[0], q.v.iter().zip(&delta[1..]).map(|(a, b)| a + l * b).collect());
            let lam = bisect_level(|l| dist(&par, &q, &shift(l)).unwrap_or(f64::INFINITY), target);
            let p = shift(lam);
            let (lo, hi) = form_ratio_bounds(&par, &p, &q)?;
            let c = form_equivalence_constant(radius).ln();
            t.record(f64::min(c - hi.ln(), lo.ln() + c));
        }
    }
    Ok(t)
}

fn star_shaped(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    let steps = 64;
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let u = uniform(&mut rng, -10.0, 10.0);
            let v = cube(&mut rng, par.vdim(), 3.0);
            let mut prev = busemann_plus(&par, &HoroPoint::new(u, vec![0.0; par.vdim()]));
            let mut worst = f64::INFINITY;
            for j in 1..=steps {
                let s = j as f64 / steps as f64;
                let f = busemann_plus(&par, &HoroPoint::new(u, scaled(&v, s)));
                worst = worst.min(f - prev);
                prev = f;
            }
            t.record(worst);
        }
    }
    Ok(t)
}

/// The ball metric `⟨a,b⟩/(1-|z|²) + Re(⟨z,a⟩* ⟨z,b⟩)/(1-|z|²)²` on tangent vectors.
fn ball_form(z: &[Quaternion], a: &[Quaternion], b: &[Quaternion]) -> f64 {
    let nz = 1.0 - z.iter().map(Quaternion::norm_sqr).sum::<f64>();
    let ip: f64 = a.iter().zip(b).map(|(x, y)| x.dot(y)).sum();
    let za = a.iter().zip(z).fold(Quaternion::ZERO, |s, (x, w)| s + x.conj() * *w);
    let zb = b.iter().zip(z).fold(Quaternion::ZERO, |s, (x, w)| s + x.conj() * *w);
    ip / nz + za.dot(&zb) / (nz * nz)
}

fn metric_pullback(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    let h = 1e-3;
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let p = HoroPoint::new(uniform(&mut rng, -1.0, 1.0), cube(&mut rng, par.vdim(), 1.0));
            let c = p.coords();
            let image = |i: usize, s: f64| -> Result<Vec<Quaternion>, VerifyError> {
                let mut x = c.clone();
                x[i] += s * h;
                Ok(horo_to_disk(&par, &HoroPoint::new(x[0], x[1..].to_vec()))?.quaternions().to_vec())
            };
            let mut jac = Vec::with_capacity(par.m);
            for i in 0..par.m {
                let (p2, p1, m1, m2) = (image(i, 2.0)?, image(i, 1.0)?, image(i, -1.0)?, image(i, -2.0)?);
                let col: Vec<Quaternion> = (0..par.rank)
                    .map(|r| (p1[r] * 8.0 - m1[r] * 8.0 - p2[r] + m2[r]) / (12.0 * h))
                    .collect();
                jac.push(col);
            }
            let z = horo_to_disk(&par, &p)?;
            let g = metric_tensor(&par, &p)?;
            let mut resid: f64 = 0.0;
            for i in 0..par.m {
                for j in 0..par.m {
                    resid = resid.max((ball_form(z.quaternions(), &jac[i], &jac[j]) - g[(i, j)]).abs());
                }
            }
            t.record(1e-8 - resid / g.amax());
        }
    }
    Ok(t)
}

fn distance_ode(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples.min(100) {
            let par = model(fam, k);
            let p = HoroPoint::new(uniform(&mut rng, -1.0, 1.0), cube(&mut rng, par.vdim(), 1.0));
            let dir = normalize_direction(&par, &p, &nonzero(&mut rng, par.m, 1.0))?;
            let len = uniform(&mut rng, 0.1, 3.0);
            let q = geodesic_ode(&par, &p, &dir, len)?;
            t.record(1e-6 - (dist(&par, &p, &q)? - len).abs());
        }
    }
    Ok(t)
}

fn isometries(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        for k in 0..cx.samples {
            let par = model(fam, k);
            let point = |rng: &mut ChaCha8Rng| HoroPoint::new(uniform(rng, -1.0, 1.0), cube(rng, par.vdim(), 1.0));
            let (p, q, c) = (point(&mut rng), point(&mut rng), point(&mut rng));
            let maps = [
                Isometry::Mobius(transvection_to_origin(&par, &horo_to_disk(&par, &c)?)),
                Isometry::NTranslation(n_translation(&par, &cube(&mut rng, par.vdim(), 2.0))?),
                Isometry::Dilation(dilation_tau(&par, uniform(&mut rng, -2.0, 2.0))),
                Isometry::EndpointSwap,
            ];
            let d0 = dist(&par, &p, &q)?;
            for g in &maps {
                let d1 = dist(&par, &g.apply(&par, &p)?, &g.apply(&par, &q)?)?;
                t.record(1e-8 * (1.0 + d0) - (d1 - d0).abs());
            }
        }
    }
    Ok(t)
}

fn charges_and_shells(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    let mut rng = cx.rng(0);
    let lattice = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], 1.0 / 32.0)?;
    for _ in 0..cx.samples.min(20) {
        let x = cube(&mut rng, 2, 0.5);
        let c = SingularComponent::point(&x, 1.0, vec![0.0])?;
        let pot = boundary_correction(&c, &lattice)?;
        let room = boundary_distance(&c, &lattice);
        let s0 = (0.5 * room).min(0.4);
        for s in [s0, 0.5 * s0, 0.25 * s0] {
            t.record(1e-6 - (pot.charge(s)? - 1.0).abs());
        }
        let s1 = (0.25 * room).min(0.05);
        let shells = [pot.shell_integral(s1)?, pot.shell_integral(0.5 * s1)?, pot.shell_integral(0.25 * s1)?];
        t.record_strict(shells[0] - shells[1]);
        t.record_strict(shells[1] - shells[2]);
        t.record_strict(shells[2]);

        // Mirror-symmetric pair.
        let (a, y) = (uniform(&mut rng, 0.2, 0.5), uniform(&mut rng, -0.3, 0.3));
        let pair = [SingularComponent::point(&[-a, y], 1.0, vec![0.0])?, SingularComponent::point(&[a, y], 1.0, vec![0.0])?];
        let mp = multi_potential(&pair, &lattice)?;
        let s = (0.5 * boundary_distance(&pair[0], &lattice)).min(0.5 * a);
        let (e1, e2) = (mp.potentials[0].charge(s)?, mp.potentials[1].charge(s)?);
        t.record(1e-9 - (e1 - e2).abs());
    }
    Ok(t)
}

fn log_cutoff_energy(_cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    let lattice = Lattice::new(&[-0.5, -0.5], &[0.5, 0.5], 1.0 / 1024.0)?;
    let c = SingularComponent::point(&[0.0, 0.0], 1.0, vec![0.0])?;
    let grid = build_grid(&lattice, std::slice::from_ref(&c))?;
    for eps in [0.2f64, 0.1, 0.05] {
        let e = dirichlet_energy(&grid, &log_cutoff(&grid, std::slice::from_ref(&c), eps)?);
        let ratio = e * eps.ln().abs() / (2.0 * PI);
        t.record(0.2 - (ratio - 1.0).abs());
    }
    Ok(t)
}

fn point_energy(fam: Family, h: f64, w: Vec<f64>) -> Result<(Energy, horomap_potentials::MultiPotential), VerifyError> {
    let par = ModelParams::new(fam, 2)?;
    let l = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], h)?;
    let c = SingularComponent::point(&[0.0, 0.0], 1.0, w)?;
    let g = build_grid(&l, std::slice::from_ref(&c))?;
    let mp = multi_potential(&[c], &l)?;
    Ok((Energy::new(g, par, mp.u0.clone())?, mp))
}

fn weighted_poincare(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    let h = 1.0 / 32.0;
    let mut rng = cx.rng(0);
    let mut cases = Vec::new();
    for fam in Family::ALL {
        let w = cube(&mut rng, ModelParams::new(fam, 2)?.vdim(), 1.0);
        let (en, mp) = point_energy(fam, h, vec![0.0; w.len()])?;
        cases.push((en, mp, w));
    }
    for k in 0..cx.samples.min(100) {
        let (en, mp, w) = &cases[k % 3];
        let g = en.grid();
        let vd = w.len();
        let rad = uniform(&mut rng, 0.1, 0.5);
        let centre = [uniform(&mut rng, -0.9 + rad, 0.9 - rad), uniform(&mut rng, -0.9 + rad, 0.9 - rad)];
        let amp = cube(&mut rng, vd, 1.0);
        let mut v = vec![0.0; g.len() * vd];
        for i in 0..g.len() {
            let x = g.point(i);
            let r2 = ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2)) / (rad * rad);
            let from_sigma = x[0].hypot(x[1]);
            if r2 < 1.0 && from_sigma > 2.0 * h && g.full_stencil(i) {
                let s = (1.0 - r2).powi(2) * smoothstep_down((4.0 * h - from_sigma) / (2.0 * h));
                for (c, a) in v[i * vd..(i + 1) * vd].iter_mut().zip(&amp) {
                    *c = a * s;
                }
            }
        }
        let (lhs, rhs) = poincare_check(en, mp, w, &v)?;
        t.record(1.0 - lhs / (rhs * (1.0 + 5.0 * h)));
    }
    Ok(t)
}

fn edge_form_equivalence(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        let par = ModelParams::new(fam, 2)?;
        let w = cube(&mut rng, par.vdim(), 0.5);
        let (en, _) = point_energy(fam, 1.0 / 16.0, w.clone())?;
        let g = en.grid();
        let u0 = en.u0();
        for _ in 0..cx.samples.min(20) {
            let radius = uniform(&mut rng, 0.25, 2.0);
            let mut f = en.zero_field();
            for i in 0..g.len() {
                if g.kind(i) == NodeKind::Excluded {
                    continue;
                }
                let base = HoroPoint::new(u0[i], w.clone());
                let delta = nonzero(&mut rng, par.m, 1.0);
                let target = radius * rng.random::<f64>();
                let at = |l: f64| HoroPoint::new(u0[i] + l * delta[0], w.iter().zip(&delta[1..]).map(|(a, b)| a + l * b).collect());
                let lam = bisect_level(|l| dist(&par, &base, &at(l)).unwrap_or(f64::INFINITY), target);
                let p = at(lam);
                f.uhat[i] = p.u - u0[i];
                f.v_at_mut(i).copy_from_slice(&p.v);
            }
            for &[i, j] in g.edges() {
                let (i, j) = (i as usize, j as usize);
                // The edge term of F is Q at (U, v_i) with U the midpoint height.
                let p = HoroPoint::new(0.5 * (u0[i] + f.uhat[i] + u0[j] + f.uhat[j]), f.v_at(i).to_vec());
                let q = HoroPoint::new(0.5 * (u0[i] + u0[j]), w.clone());
                let (lo, hi) = form_ratio_bounds(&par, &p, &q)?;
                let c = form_equivalence_constant(radius.max(dist(&par, &p, &q)?)).ln();
                t.record(f64::min(c - hi.ln(), lo.ln() + c));
            }
        }
    }
    Ok(t)
}

fn truncation_monotone(cx: &Ctx) -> Result<Tally, VerifyError> {
    let mut t = Tally::new();
    let h = 0.125;
    for (fi, fam) in Family::ALL.into_iter().enumerate() {
        let mut rng = cx.rng(fi as u64);
        let par = ModelParams::new(fam, 2)?;
        let vd = par.vdim();
        let w = cube(&mut rng, vd, 0.5);
        let (gu, gv) = (cube(&mut rng, 2, 0.3), cube(&mut rng, 2 * vd, 0.3));
        let l = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], h)?;
        let psi = BoundaryData::sample(&l, vd, |x| {
            let v = (0..vd).map(|k| w[k] + gv[2 * k] * x[0] + gv[2 * k + 1] * x[1]).collect();
            HoroPoint::new(gu[0] * x[0] + gu[1] * x[1], v)
        })?;
        let c = SingularComponent::point(&[0.0, 0.0], 1.0, w.clone())?;
        let problem = Problem::new(par, &[-1.0, -1.0], &[1.0, 1.0], h, vec![c], psi)?;
        let s = setup(&problem)?;
        for _ in 0..cx.samples.min(20) {
            let amp = uniform(&mut rng, 0.5, 3.0);
            let mut f = s.initial.clone();
            for &i in s.grid.free_nodes() {
                let i = i as usize;
                f.uhat[i] += rng.random_range(-amp..amp);
                for c in f.v_at_mut(i) {
                    *c += rng.random_range(-amp..amp);
                }
            }
            let before = s.energy.value(&f)?;
            let tu = truncate_u(&s.grid, &f, s.levels.t);
            let tb = truncate_ubar(&s.energy, &f, &s.levels)?;
            t.record(before - s.energy.value(&tu)?);
            t.record(before - s.energy.value(&tb)?);
        }
    }
    Ok(t)
}
