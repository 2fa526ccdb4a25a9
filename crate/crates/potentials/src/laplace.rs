//! Conjugate-gradient solver for the discrete Dirichlet problem on a lattice.

use crate::lattice::Lattice;
use crate::PotentialError;

/// Relative residual targeted by [`harmonic_extension`].
pub const CG_TOLERANCE: f64 = 1e-14;
/// Relative residual above which the solve is reported as failed.
pub const CG_FAILURE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Overwrites the free entries of `values` with the discrete-harmonic extension
/// of the fixed ones (5-point or 7-point stencil). Nodes with `fixed(i)` keep
/// their values; every boundary node of the lattice must be fixed.
pub fn solve_dirichlet(
    lattice: &Lattice,
    values: &mut [f64],
    fixed: impl Fn(usize) -> bool,
) -> Result<CgReport, PotentialError> {
    let n = lattice.len();
    if values.len() != n {
        return Err(PotentialError::DimensionMismatch { expected: n, got: values.len() });
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed(i)).collect();
    if free.iter().any(|&i| lattice.is_boundary(i)) {
        return Err(PotentialError::Configuration("boundary nodes must carry Dirichlet values".into()));
    }
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        slot[i] = k;
    }
    let m = free.len();
    if m == 0 {
        return Ok(CgReport { iterations: 0, relative_residual: 0.0 });
    }
    let degree = 2.0 * lattice.dim() as f64;
    // Right-hand side from fixed neighbours, operator A x = Σ_j (x_i - x_j) over free neighbours.
    let mut b = vec![0.0; m];
    for (k, &i) in free.iter().enumerate() {
        for j in lattice.neighbors(i) {
            if slot[j] == usize::MAX {
                b[k] += values[j];
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (k, &i) in free.iter().enumerate() {
            let mut acc = degree * x[k];
            for j in lattice.neighbors(i) {
                let s = slot[j];
                if s != usize::MAX {
                    acc -= x[s];
                }
            }
            out[k] = acc;
        }
    };
    let mut x: Vec<f64> = free.iter().map(|&i| values[i]).collect();
    let mut ax = vec![0.0; m];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let max_iter = 20 * m + 100;
    let mut it = 0;
    let mut last_true = f64::INFINITY;
    while rr.sqrt() > CG_TOLERANCE * scale && it < max_iter {
        apply(&p, &mut ax);
        let pap: f64 = p.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let alpha = rr / pap;
        for k in 0..m {
            x[k] += alpha * p[k];
            r[k] -= alpha * ax[k];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..m {
            p[k] = r[k] + beta * p[k];
        }
        it += 1;
        // Replace the recursive residual periodically to avoid drift, and stop
        // once rounding prevents further progress below the failure threshold.
        if it % 50 == 0 {
            apply(&x, &mut ax);
            for k in 0..m {
                r[k] = b[k] - ax[k];
            }
            rr = r.iter().map(|v| v * v).sum();
            let true_res = rr.sqrt() / scale;
            if true_res < CG_FAILURE && true_res > 0.5 * last_true {
                break;
            }
            last_true = true_res;
        }
    }
    apply(&x, &mut ax);
    let res = b.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt() / scale;
    if res > CG_FAILURE {
        return Err(PotentialError::SolverFailure { iterations: it, relative_residual: res });
    }
    for (k, &i) in free.iter().enumerate() {
        values[i] = x[k];
    }
    Ok(CgReport { iterations: it, relative_residual: res })
}

/// Discrete-harmonic extension of the boundary values already stored in `values`.
pub fn harmonic_extension(lattice: &Lattice, values: &mut [f64]) -> Result<CgReport, PotentialError> {
    if values.len() == lattice.len() {
        // Constant data extend exactly.
        let mut fixed = (0..lattice.len()).filter(|&i| lattice.is_boundary(i)).map(|i| values[i]);
        if let Some(c) = fixed.next() {
            if fixed.all(|x| x == c) {
                values.iter_mut().for_each(|x| *x = c);
                return Ok(CgReport { iterations: 0, relative_residual: 0.0 });
            }
        }
    }
    solve_dirichlet(lattice, values, |i| lattice.is_boundary(i))
}

/// The stencil Laplacian `Σ_j (f_j - f_i) / h²` at a non-boundary node.
pub fn discrete_laplacian(lattice: &Lattice, values: &[f64], i: usize) -> f64 {
    let h2 = lattice.h() * lattice.h();
    lattice.neighbors(i).map(|j| values[j] - values[i]).sum::<f64>() / h2
}
