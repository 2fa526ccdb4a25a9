//! TOML problem files.
//!
//! ```toml
//! [target]
//! family = "C"
//! rank = 2
//!
//! [domain]
//! lo = [-1.0, -1.0]
//! hi = [1.0, 1.0]
//! h = 0.0625
//!
//! [[singularities]]
//! kind = "point"
//! position = [0.0, 0.0]
//! density = 1.0
//! offset = [0.0, 0.0, 0.0]
//!
//! [boundary]
//! constant = { u = 0.0, v = [0.0, 0.0, 0.0] }
//! ```
//!
//! Boundary data may instead be `affine = { u = [c, g0, g1], v = [[c, g0, g1], ...] }`
//! or `table = "file.csv"`, a CSV with columns `x0, x1[, x2], u, v0, ...` and one
//! row per boundary node. Optional sections: `[solver]` (descent settings),
//! `[output] dir`, and `[uniqueness] runs, seed`.

use std::ops::Range;
use std::path::{Path, PathBuf};

use horomap_energy::BoundaryData;
use horomap_geometry::{Family, HoroPoint, ModelParams};
use horomap_potentials::{Lattice, SingularComponent};
use horomap_solver::{Problem, SolverOptions};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Syntax and schema errors; the message carries the line and column.
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("{path}: {message}")]
    Table { path: PathBuf, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    target: Spanned<Target>,
    domain: Spanned<Domain>,
    #[serde(default)]
    singularities: Vec<Spanned<Singularity>>,
    boundary: Spanned<Boundary>,
    solver: Option<Spanned<SolverOptions>>,
    output: Option<Output>,
    uniqueness: Option<Spanned<Uniqueness>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Target {
    family: String,
    rank: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Domain {
    /// Optional cross-check of the box dimension.
    n: Option<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    h: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Singularity {
    kind: String,
    position: Option<Vec<f64>>,
    from: Option<[f64; 3]>,
    to: Option<[f64; 3]>,
    #[serde(default = "unit")]
    density: f64,
    offset: Option<Vec<f64>>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Boundary {
    constant: Option<Constant>,
    affine: Option<Affine>,
    table: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Constant {
    #[serde(default)]
    u: f64,
    v: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Affine {
    u: Vec<f64>,
    v: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Output {
    dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Uniqueness {
    runs: usize,
    #[serde(default)]
    seed: u64,
}

/// A validated configuration.
#[derive(Debug)]
pub struct Config {
    pub problem: Problem,
    pub output_dir: Option<PathBuf>,
    /// Number of randomized runs and their seed, when a uniqueness study is requested.
    pub uniqueness: Option<(usize, u64)>,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Anchor<'a> {
    text: &'a str,
}

impl Anchor<'_> {
    fn err(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { line: line_of(self.text, span.start), message: message.into() }
    }
}

impl Config {
    /// Parses and validates `text`; relative table paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Config, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string().trim_end().to_string()))?;
        let at = Anchor { text };

        let tspan = raw.target.span();
        let target = raw.target.into_inner();
        let family: Family = target.family.parse().map_err(|e| at.err(tspan.clone(), format!("{e}")))?;
        let params = ModelParams::new(family, target.rank).map_err(|e| at.err(tspan, format!("{e}")))?;
        let vd = params.vdim();

        let dspan = raw.domain.span();
        let domain = raw.domain.into_inner();
        if let Some(n) = domain.n {
            if n != domain.lo.len() {
                return Err(at.err(dspan, format!("n = {n} but the box corners have {} coordinates", domain.lo.len())));
            }
        }
        let lattice = Lattice::new(&domain.lo, &domain.hi, domain.h).map_err(|e| at.err(dspan.clone(), format!("{e}")))?;
        let n = lattice.dim();

        let mut components = Vec::with_capacity(raw.singularities.len());
        for s in raw.singularities {
            let span = s.span();
            let c = singularity(&at, span.clone(), s.into_inner(), n, vd, &lattice)?;
            for (k, prev) in components.iter().enumerate() {
                let prev: &SingularComponent = prev;
                if !(prev.separation(&c) > 0.0) {
                    return Err(at.err(span.clone(), format!("singularity overlaps singularity {}", k + 1)));
                }
            }
            components.push(c);
        }

        let bspan = raw.boundary.span();
        let boundary = boundary(&at, bspan, raw.boundary.into_inner(), &lattice, vd, base)?;

        let mut problem = Problem::new(params, &domain.lo, &domain.hi, domain.h, components, boundary)
            .map_err(|e| at.err(dspan, format!("{e}")))?;
        if let Some(opts) = raw.solver {
            let span = opts.span();
            let opts = opts.into_inner();
            opts.check().map_err(|e| at.err(span, format!("{e}")))?;
            problem = problem.with_options(opts);
        }
        let uniqueness = match raw.uniqueness {
            Some(u) => {
                let span = u.span();
                let u = u.into_inner();
                if u.runs < 2 {
                    return Err(at.err(span, "a uniqueness study needs at least two runs"));
                }
                Some((u.runs, u.seed))
            }
            None => None,
        };
        Ok(Config { problem, output_dir: raw.output.and_then(|o| o.dir), uniqueness })
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Config::parse(&text, base)
    }
}

fn singularity(
    at: &Anchor,
    span: Range<usize>,
    s: Singularity,
    n: usize,
    vd: usize,
    lattice: &Lattice,
) -> Result<SingularComponent, ConfigError> {
    let offset = s.offset.unwrap_or_else(|| vec![0.0; vd]);
    if offset.len() != vd {
        return Err(at.err(span, format!("offset has {} entries, the target needs {vd}", offset.len())));
    }
    if !(s.density > 0.0 && s.density.is_finite()) {
        return Err(at.err(span, format!("density must be positive, got {}", s.density)));
    }
    let c = match s.kind.as_str() {
        "point" => {
            if s.from.is_some() || s.to.is_some() {
                return Err(at.err(span, "a point takes `position`, not `from`/`to`"));
            }
            let x = s.position.ok_or_else(|| at.err(span.clone(), "a point needs `position`"))?;
            if x.len() != n {
                return Err(at.err(span, format!("position has {} coordinates, the domain has {n}", x.len())));
            }
            if !lattice.contains(&x) || lattice.distance_to_boundary(&x) <= 0.0 {
                return Err(at.err(span, "position must lie inside the box"));
            }
            SingularComponent::point(&x, s.density, offset)
        }
        "segment" => {
            if s.position.is_some() {
                return Err(at.err(span, "a segment takes `from` and `to`, not `position`"));
            }
            if n != 3 {
                return Err(at.err(span, "segments need a three-dimensional domain"));
            }
            let (p, q) = match (s.from, s.to) {
                (Some(p), Some(q)) => (p, q),
                _ => return Err(at.err(span, "a segment needs `from` and `to`")),
            };
            for e in [&p, &q] {
                if !lattice.contains(e) || lattice.distance_to_boundary(e) <= 0.0 {
                    return Err(at.err(span, "segment endpoints must lie inside the box"));
                }
            }
            SingularComponent::segment(p, q, s.density, offset)
        }
        other => return Err(at.err(span, format!("unknown singularity kind `{other}` (expected point or segment)"))),
    };
    c.map_err(|e| at.err(span, format!("{e}")))
}

fn boundary(
    at: &Anchor,
    span: Range<usize>,
    b: Boundary,
    lattice: &Lattice,
    vd: usize,
    base: &Path,
) -> Result<BoundaryData, ConfigError> {
    let n = lattice.dim();
    let given = usize::from(b.constant.is_some()) + usize::from(b.affine.is_some()) + usize::from(b.table.is_some());
    if given != 1 {
        return Err(at.err(span, "give exactly one of `constant`, `affine` or `table`"));
    }
    let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
    if let Some(c) = b.constant {
        let v = c.v.unwrap_or_else(|| vec![0.0; vd]);
        if v.len() != vd {
            return Err(at.err(span, format!("constant v has {} entries, the target needs {vd}", v.len())));
        }
        if !c.u.is_finite() || !finite(&v) {
            return Err(at.err(span, "boundary values must be finite"));
        }
        return Ok(BoundaryData::Constant(HoroPoint::new(c.u, v)));
    }
    if let Some(a) = b.affine {
        let v = a.v.unwrap_or_else(|| vec![vec![0.0; n + 1]; vd]);
        if a.u.len() != n + 1 || v.len() != vd || v.iter().any(|r| r.len() != n + 1) {
            return Err(at.err(
                span,
                format!("affine data need u with {} coefficients and {vd} rows of v with {} each", n + 1, n + 1),
            ));
        }
        if !finite(&a.u) || !v.iter().all(|r| finite(r)) {
            return Err(at.err(span, "boundary coefficients must be finite"));
        }
        let eval = |c: &[f64], x: &[f64]| c[0] + c[1..].iter().zip(x).map(|(g, y)| g * y).sum::<f64>();
        return BoundaryData::sample(lattice, vd, |x| HoroPoint::new(eval(&a.u, x), v.iter().map(|r| eval(r, x)).collect()))
            .map_err(|e| at.err(span, format!("{e}")));
    }
    let path = base.join(b.table.expect("exactly one boundary source"));
    read_table(&path, lattice, vd)
}

/// Reads a boundary table, matching rows to lattice nodes by coordinates.
fn read_table(path: &Path, lattice: &Lattice, vd: usize) -> Result<BoundaryData, ConfigError> {
    let n = lattice.dim();
    let bad = |message: String| ConfigError::Table { path: path.to_path_buf(), message };
    let file = std::fs::File::open(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut rdr = csv::Reader::from_reader(file);
    let cols = rdr.headers().map_err(|e| bad(e.to_string()))?.len();
    if cols != n + 1 + vd {
        return Err(bad(format!("expected {} columns (x0..x{}, u, v0..v{}), found {cols}", n + 1 + vd, n - 1, vd - 1)));
    }
    let mut u = vec![0.0; lattice.len()];
    let mut v = vec![0.0; lattice.len() * vd];
    let mut seen = vec![false; lattice.len()];
    let h = lattice.h();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| bad(format!("line {line}: {e}")))?;
        if vals.len() != cols || vals.iter().any(|x| !x.is_finite()) {
            return Err(bad(format!("line {line}: expected {cols} finite numbers")));
        }
        let mut m = [0usize; 3];
        for k in 0..n {
            let r = (vals[k] - lattice.lo()[k]) / h;
            let ri = r.round();
            if (r - ri).abs() > 1e-6 || ri < 0.0 || ri as usize >= lattice.shape()[k] {
                return Err(bad(format!("line {line}: ({}) is not a lattice node", fmt_coords(&vals[..n]))));
            }
            m[k] = ri as usize;
        }
        let i = lattice.index(&m[..n]);
        if !lattice.is_boundary(i) {
            return Err(bad(format!("line {line}: ({}) is an interior node", fmt_coords(&vals[..n]))));
        }
        if seen[i] {
            return Err(bad(format!("line {line}: node ({}) listed twice", fmt_coords(&vals[..n]))));
        }
        seen[i] = true;
        u[i] = vals[n];
        v[i * vd..(i + 1) * vd].copy_from_slice(&vals[n + 1..]);
    }
    if let Some(i) = (0..lattice.len()).find(|&i| lattice.is_boundary(i) && !seen[i]) {
        let x = lattice.point(i);
        return Err(bad(format!("boundary node ({}) is missing", fmt_coords(&x[..n]))));
    }
    Ok(BoundaryData::Nodal { u, v })
}

fn fmt_coords(x: &[f64]) -> String {
    x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}
