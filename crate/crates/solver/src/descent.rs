//! Limited-memory quasi-Newton descent on the discrete energy.
//!
//! Each sweep takes one L-BFGS step with Armijo backtracking (`c = 1e-4`,
//! halving). Step acceptance uses the edgewise increment `F(f + αs) - F(f)`,
//! which stays accurate long after `F` itself stops resolving the change.

use std::collections::VecDeque;
use std::time::Instant;

use horomap_energy::{Energy, MapField};
use serde::Serialize;

use crate::apriori::AprioriBound;
use crate::diagnostics::{diagnostics_multi, observed_distances};
use crate::oracle::oracle_match;
use crate::problem::{setup, Problem, Setup, SolverOptions};
use crate::report::SolveReport;
use crate::truncation::{truncate_u, truncate_ubar, TruncationLevels};
use crate::SolverError;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxSweeps,
}

/// Outcome of one descent run.
#[derive(Clone, Debug)]
pub struct Descent {
    pub field: MapField,
    pub status: SolveStatus,
    pub sweeps: usize,
    /// `F` after every sweep, starting with the initial field.
    pub history: Vec<f64>,
    pub residual: f64,
    pub truncations: usize,
}

fn dot(a: &MapField, b: &MapField) -> f64 {
    let s: f64 = a.uhat.iter().zip(&b.uhat).map(|(x, y)| x * y).sum();
    s + a.v.iter().zip(&b.v).map(|(x, y)| x * y).sum::<f64>()
}

fn axpy(y: &mut MapField, a: f64, x: &MapField) {
    for (p, q) in y.uhat.iter_mut().zip(&x.uhat) {
        *p += a * q;
    }
    for (p, q) in y.v.iter_mut().zip(&x.v) {
        *p += a * q;
    }
}

fn sub(a: &MapField, b: &MapField) -> MapField {
    let mut out = a.clone();
    axpy(&mut out, -1.0, b);
    out
}

fn scale_by(x: &mut MapField, d: &MapField, power: i32) {
    for (p, q) in x.uhat.iter_mut().zip(&d.uhat) {
        *p *= q.powi(power);
    }
    for (p, q) in x.v.iter_mut().zip(&d.v) {
        *p *= q.powi(power);
    }
}

/// Diagonal of the Hessian of the quadratic part of `F` with weights frozen at `f`.
fn diagonal(energy: &Energy, f: &MapField) -> MapField {
    let g = energy.grid();
    let p = energy.params();
    let s = p.vert_dim();
    let u0 = energy.u0();
    let w = 2.0 * g.edge_weight();
    let mut d = MapField::constant(g.len(), 1.0, &vec![1.0; p.vdim()]);
    for &i in g.free_nodes() {
        let i = i as usize;
        let (mut du, mut d2, mut d4) = (0.0, 0.0, 0.0);
        for &e in g.incident_edges(i) {
            let [a, b] = g.edges()[e as usize];
            let (a, b) = (a as usize, b as usize);
            let big_u = 0.5 * ((u0[a] + f.uhat[a]) + (u0[b] + f.uhat[b]));
            du += w;
            d2 += w * (2.0 * big_u).exp();
            if s > 0 {
                d4 += w * (4.0 * big_u).exp();
            }
        }
        if du == 0.0 {
            continue;
        }
        d.uhat[i] = du;
        for (k, c) in d.v_at_mut(i).iter_mut().enumerate() {
            *c = if k < s { d4 } else { d2 };
        }
    }
    d
}

fn mask_free(energy: &Energy, x: &mut MapField) {
    let g = energy.grid();
    let mut keep = vec![false; g.len()];
    for &i in g.free_nodes() {
        keep[i as usize] = true;
    }
    for i in 0..g.len() {
        if !keep[i] {
            x.uhat[i] = 0.0;
            x.v_at_mut(i).iter_mut().for_each(|c| *c = 0.0);
        }
    }
}

struct Memory {
    pairs: VecDeque<(MapField, MapField, f64)>,
    cap: usize,
}

impl Memory {
    fn push(&mut self, s: MapField, y: MapField) {
        let sy = dot(&s, &y);
        if !(sy > 0.0 && sy.is_finite()) {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion with initial matrix `γ D^{-1}`.
    fn direction(&self, g: &MapField, diag: &MapField) -> MapField {
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(&mut q, -a, y);
            alphas.push(a);
        }
        scale_by(&mut q, diag, -1);
        if let Some((s, y, _)) = self.pairs.back() {
            let mut dy = y.clone();
            scale_by(&mut dy, diag, -1);
            let gamma = dot(s, y) / dot(y, &dy);
            if gamma.is_finite() && gamma > 0.0 {
                for x in q.uhat.iter_mut().chain(q.v.iter_mut()) {
                    *x *= gamma;
                }
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(&mut q, a - b, s);
        }
        for x in q.uhat.iter_mut().chain(q.v.iter_mut()) {
            *x = -*x;
        }
        q
    }
}

fn converged(options: &SolverOptions, residual: f64, decrease: f64, f: f64) -> bool {
    residual <= options.tol && decrease <= options.rel_decrease * f.abs().max(1.0)
}

/// Runs descent from `init`; boundary and excluded nodes keep their values.
/// `levels` enables the truncation passes.
pub fn minimize_from(
    energy: &Energy,
    options: &SolverOptions,
    levels: Option<&TruncationLevels>,
    init: MapField,
) -> Result<Descent, SolverError> {
    options.check()?;
    let mut f = init;
    if !f.all_finite() {
        return Err(SolverError::Numerical("initial field is not finite".into()));
    }
    let mut value = energy.value(&f)?;
    let mut grad = energy.gradient(&f)?;
    let mut residual = energy.residual_of(&grad);
    let mut history = vec![value];
    let mut memory = Memory { pairs: VecDeque::new(), cap: options.memory };
    let mut decrease = 0.0;
    let mut truncations = 0;
    let mut sweep = 0;
    while !converged(options, residual, decrease, value) {
        if sweep == options.max_sweeps {
            return Ok(Descent { field: f, status: SolveStatus::MaxSweeps, sweeps: sweep, history, residual, truncations });
        }
        sweep += 1;
        let diag = diagonal(energy, &f);
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if memory.pairs.is_empty() {
                    break;
                }
                memory.pairs.clear();
            }
            let mut d = memory.direction(&grad, &diag);
            mask_free(energy, &mut d);
            let mut slope = dot(&grad, &d);
            if !(slope < 0.0 && slope.is_finite()) {
                memory.pairs.clear();
                d = memory.direction(&grad, &diag);
                mask_free(energy, &mut d);
                slope = dot(&grad, &d);
                if !(slope < 0.0 && slope.is_finite()) {
                    break;
                }
            }
            let mut alpha = 1.0;
            for _ in 0..MAX_HALVINGS {
                let df = energy.delta(&f, &d, alpha)?;
                if df.is_finite() && df <= ARMIJO * alpha * slope {
                    accepted = Some((d, alpha, df));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((d, alpha, df)) = accepted else {
            if residual <= options.tol {
                // No representable decrease is left.
                sweep -= 1;
                break;
            }
            return Err(SolverError::LineSearch { sweep, residual });
        };
        let mut next = f.clone();
        axpy(&mut next, alpha, &d);
        let next_grad = energy.gradient(&next)?;
        let mut step = d;
        for x in step.uhat.iter_mut().chain(step.v.iter_mut()) {
            *x *= alpha;
        }
        memory.push(step, sub(&next_grad, &grad));
        f = next;
        grad = next_grad;
        value += df;
        decrease = -df;
        if let Some(lv) = levels.filter(|_| options.truncation && sweep % options.truncation_every == 0) {
            let cand = truncate_ubar(energy, &truncate_u(energy.grid(), &f, lv.t), lv)?;
            if cand != f {
                let dt = energy.delta(&f, &sub(&cand, &f), 1.0)?;
                if dt <= 0.0 {
                    f = cand;
                    value += dt;
                    decrease -= dt;
                    grad = energy.gradient(&f)?;
                    memory.pairs.clear();
                    truncations += 1;
                }
            }
        }
        residual = energy.residual_of(&grad);
        history.push(value);
        if !f.all_finite() || !value.is_finite() {
            return Err(SolverError::Numerical(format!("field became non-finite at sweep {sweep}")));
        }
    }
    Ok(Descent { field: f, status: SolveStatus::Converged, sweeps: sweep, history, residual, truncations })
}

fn report(problem: &Problem, s: &Setup, d: &Descent, seconds: f64) -> Result<SolveReport, SolverError> {
    let observed = observed_distances(s, &d.field);
    let bounds: Vec<AprioriBound> = s.bounds.clone();
    let slack = 10.0 * problem.h;
    let violated = observed.iter().zip(&bounds).any(|(o, b)| *o > b.radius + slack);
    let components = diagnostics_multi(s, &d.field)?;
    Ok(SolveReport {
        status: d.status,
        sweeps: d.sweeps,
        final_energy: s.energy.value(&d.field)?,
        final_residual: d.residual,
        energy_history: d.history.clone(),
        truncations: d.truncations,
        apriori: bounds,
        observed_max_distance: observed,
        apriori_slack: slack,
        apriori_violated: violated,
        blend_radius: s.blend_radius,
        components,
        geodesic_oracle_match: oracle_match(s, &d.field)?.map(|m| m.matches),
        wall_seconds: seconds,
    })
}

/// Sets up `problem`, descends from the blended extension and assembles the report.
pub fn minimize(problem: &Problem) -> Result<(MapField, SolveReport), SolverError> {
    let start = Instant::now();
    let s = setup(problem)?;
    let d = minimize_from(&s.energy, &problem.options, Some(&s.levels), s.initial.clone())?;
    let rep = report(problem, &s, &d, start.elapsed().as_secs_f64())?;
    Ok((d.field, rep))
}
