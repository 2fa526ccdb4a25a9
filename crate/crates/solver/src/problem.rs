//! Problem description and the setup shared by every solve.

use horomap_energy::{boundary_extension, build_grid, BoundaryData, Energy, Grid, MapField};
use horomap_geometry::ModelParams;
use horomap_potentials::{multi_potential, Lattice, MultiPotential, SingularComponent};
use serde::{Deserialize, Serialize};

use crate::apriori::{apriori_bounds, AprioriBound};
use crate::truncation::{reverse_offset, TruncationLevels};
use crate::SolverError;

/// Stopping rule and descent settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Euler–Lagrange residual target, in density units.
    pub tol: f64,
    /// Largest accepted per-sweep decrease of `F` relative to `max(F, 1)` at convergence.
    pub rel_decrease: f64,
    pub max_sweeps: usize,
    pub truncation: bool,
    /// Sweeps between truncation passes.
    pub truncation_every: usize,
    /// Number of stored L-BFGS pairs.
    pub memory: usize,
    pub workers: usize,
    /// Blend radius of the initial extension; `None` picks the default.
    pub blend_radius: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            rel_decrease: 1e-12,
            max_sweeps: 100_000,
            truncation: true,
            truncation_every: 10,
            memory: 10,
            workers: 1,
            blend_radius: None,
        }
    }
}

impl SolverOptions {
    pub fn check(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Configuration(m.to_string()));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tolerance must be positive");
        }
        if !(self.rel_decrease >= 0.0 && self.rel_decrease.is_finite()) {
            return bad("relative decrease threshold must be non-negative");
        }
        if self.truncation_every == 0 {
            return bad("truncation interval must be at least one sweep");
        }
        if self.memory == 0 {
            return bad("descent memory must be at least 1");
        }
        if self.workers == 0 {
            return bad("worker count must be at least 1");
        }
        if let Some(r) = self.blend_radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad("blend radius must be positive");
            }
        }
        Ok(())
    }
}

/// A Dirichlet problem for maps `Ω ∖ Σ → H^ℓ_K` with prescribed singularities.
///
/// Every `γ_i` is the vertical geodesic `t ↦ (t, w_i)`, so all of them share
/// the endpoint `γ_1(-∞)` of the chart.
#[derive(Clone, Debug)]
pub struct Problem {
    pub params: ModelParams,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: f64,
    pub components: Vec<SingularComponent>,
    pub boundary: BoundaryData,
    pub options: SolverOptions,
}

impl Problem {
    pub fn new(
        params: ModelParams,
        lo: &[f64],
        hi: &[f64],
        h: f64,
        components: Vec<SingularComponent>,
        boundary: BoundaryData,
    ) -> Result<Self, SolverError> {
        let p = Problem {
            params,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            h,
            components,
            boundary,
            options: SolverOptions::default(),
        };
        p.lattice()?;
        Ok(p)
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn lattice(&self) -> Result<Lattice, SolverError> {
        Ok(Lattice::new(&self.lo, &self.hi, self.h)?)
    }

    fn check(&self, lattice: &Lattice) -> Result<(), SolverError> {
        self.options.check()?;
        let vd = self.params.vdim();
        for (i, c) in self.components.iter().enumerate() {
            if c.dim() != lattice.dim() {
                return Err(SolverError::Configuration(format!(
                    "component {i} lives in dimension {} but the domain has dimension {}",
                    c.dim(),
                    lattice.dim()
                )));
            }
            if c.offset.len() != vd {
                return Err(SolverError::Configuration(format!(
                    "component {i} has a target offset of length {}, expected {vd}",
                    c.offset.len()
                )));
            }
            if c.offset.iter().any(|x| !x.is_finite()) {
                return Err(SolverError::Configuration(format!("component {i} has a non-finite target offset")));
            }
        }
        Ok(())
    }
}

/// Everything derived from a [`Problem`] before descent starts.
#[derive(Clone)]
pub struct Setup {
    pub grid: Grid,
    pub potentials: MultiPotential,
    pub energy: Energy,
    /// The blended extension `(ũ, ṽ)`.
    pub initial: MapField,
    pub blend_radius: f64,
    pub boundary: BoundaryData,
    pub levels: TruncationLevels,
    /// One bound per component (one bound about `γ_0` when there are none).
    pub bounds: Vec<AprioriBound>,
}

pub fn setup(problem: &Problem) -> Result<Setup, SolverError> {
    let lattice = problem.lattice()?;
    problem.check(&lattice)?;
    let grid = build_grid(&lattice, &problem.components)?;
    let potentials = multi_potential(&problem.components, &lattice)?;
    let vd = problem.params.vdim();
    problem.boundary.check(&grid, vd)?;
    let (initial, blend_radius) = boundary_extension(
        &grid,
        &problem.boundary,
        &problem.components,
        &potentials.u0,
        vd,
        problem.options.blend_radius,
    )?;
    let energy = Energy::new(grid.clone(), problem.params, potentials.u0.clone())?.with_workers(problem.options.workers)?;
    let bounds = apriori_bounds(&problem.params, &grid, &problem.boundary, &problem.components, &potentials)?;
    let first = &bounds[0];
    let levels = TruncationLevels {
        t: first.t,
        t_bar: first.t_bar,
        offset: problem.components.first().map(|c| c.offset.clone()).unwrap_or_else(|| vec![0.0; vd]),
        ubar0: reverse_offset(&potentials),
    };
    Ok(Setup { grid, potentials, energy, initial, blend_radius, boundary: problem.boundary.clone(), levels, bounds })
}
